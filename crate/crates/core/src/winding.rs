//! Phase variation of `det Γ` along the four boundary edges, the total winding
//! number, and the `Var[φ_{a,b}]` quadrature.

use num_complex::Complex;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::extensions::{classify, negative_count_cdstar, AdmissiblePair, CaseLabel, Flux};
use crate::linalg::Matrix2;
use crate::scalar::{exact_sum, Real};
use crate::scattering::{Edge, EdgeFunctionSet};
use crate::special_fn::{digamma_unchecked, unwrap, PhaseTrack};

/// Unwrapped change of `arg det` along a sampled path of matrices.
///
/// Fails with [`Error::RefinementNeeded`] if two neighbouring determinants
/// differ in phase by `π/2` or more.
pub fn edge_variation<T: Real>(samples: &[Matrix2<T>]) -> Result<T> {
    let dets: Vec<Complex<T>> = samples.iter().map(|m| m.det()).collect();
    Ok(unwrap(&dets)?.variation())
}

/// Sampling knobs for [`BoundaryLoop::sample`].
#[derive(Debug, Clone, Copy)]
pub struct SamplingOptions {
    /// Initial number of interior samples per edge.
    pub initial: usize,
    /// Largest Frobenius distance allowed between neighbouring samples.
    pub max_step: f64,
    /// Hard cap on samples per edge.
    pub max_samples: usize,
    /// Initial `u`-range for the x-edges, `x = sinh(u)`, `|u| ≤ u_max`.
    pub u_max: f64,
    /// Largest `|u|` the x-edges may be extended to.
    pub u_cap: f64,
    /// Initial `v`-range for the κ-edge, `κ = e^v`.
    pub v_range: (f64, f64),
    /// Largest `|v|` the κ-edge may be extended to.
    pub v_cap: f64,
}

impl Default for SamplingOptions {
    fn default() -> Self {
        let ln10 = std::f64::consts::LN_10;
        Self {
            initial: 257,
            max_step: 0.25,
            max_samples: 1 << 20,
            u_max: 40f64.asinh(),
            u_cap: 1e6f64.asinh(),
            v_range: (-8.0 * ln10, 8.0 * ln10),
            v_cap: 300.0,
        }
    }
}

impl SamplingOptions {
    /// Twice as many initial samples and half the step bound.
    pub fn doubled(self) -> Self {
        Self {
            initial: 2 * self.initial - 1,
            max_step: self.max_step / 2.0,
            ..self
        }
    }
}

/// One sampled edge in traversal order, endpoints included.
#[derive(Debug, Clone, Serialize)]
#[serde(bound(serialize = "T: Real"))]
pub struct EdgeTrack<T> {
    pub edge: Edge,
    /// Native parameter: `x` on B1/B3, `κ` on B2/B4 (infinite or zero at the ends).
    pub params: Vec<T>,
    #[serde(skip)]
    pub values: Vec<Matrix2<T>>,
    #[serde(skip)]
    track: PhaseTrack<T>,
}

impl<T: Real> EdgeTrack<T> {
    pub fn variation(&self) -> T {
        self.track.variation()
    }

    /// Unwrapped `arg det Γ` at each sample.
    pub fn det_phases(&self) -> &[T] {
        &self.track.unwrapped_args
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    /// Same samples traversed backwards; its variation is exactly the negative.
    pub fn reversed(&self) -> Result<Self> {
        let values: Vec<Matrix2<T>> = self.values.iter().rev().copied().collect();
        let dets: Vec<Complex<T>> = values.iter().map(|m| m.det()).collect();
        Ok(Self {
            edge: self.edge,
            params: self.params.iter().rev().copied().collect(),
            values,
            track: unwrap(&dets)?,
        })
    }
}

/// The closed boundary path `B1 → B2 → B3 → B4`:
/// `x: −∞→∞` on `Γ₁`, `κ: 0→∞` on `Γ₂`, `x: ∞→−∞` on `Γ₃`, `κ: ∞→0` on `Γ₄`.
#[derive(Debug, Clone, Serialize)]
#[serde(bound(serialize = "T: Real"))]
pub struct BoundaryLoop<T> {
    pub edges: Vec<EdgeTrack<T>>,
}

/// Native coordinate of a sampled point: finite interior value or an end.
#[derive(Debug, Clone, Copy)]
enum Node<T> {
    Start,
    At(T),
    End,
}

impl<T: Real> BoundaryLoop<T> {
    pub fn sample(edges: &EdgeFunctionSet<T>) -> Result<Self> {
        Self::sample_with(edges, SamplingOptions::default())
    }

    pub fn sample_with(set: &EdgeFunctionSet<T>, opts: SamplingOptions) -> Result<Self> {
        let (s0, sinf) = set.endpoints();
        let one = Matrix2::identity();
        let inf = T::infinity();
        let sinh = |u: T| u.sinh();
        let exp = |v: T| v.exp();
        let g1 = |u: T| set.gamma1(u.sinh());
        let g3 = |u: T| set.gamma3(-u.sinh());
        let g2 = |v: T| set.gamma2_log(v);
        let u = (opts.u_max, opts.u_cap);
        let b1 = sample_edge(Edge::B1, &g1, one, s0, (-u.0, u.0), u.1, opts, |n| match n {
            Node::Start => -inf,
            Node::At(u) => sinh(u),
            Node::End => inf,
        })?;
        let b2 = sample_edge(Edge::B2, &g2, s0, sinf, opts.v_range, opts.v_cap, opts, |n| match n {
            Node::Start => T::zero(),
            Node::At(v) => exp(v),
            Node::End => inf,
        })?;
        // B3 runs from x = +∞ to −∞; sampled in w = −u so the grid is increasing.
        let b3 = sample_edge(Edge::B3, &g3, sinf, one, (-u.0, u.0), u.1, opts, |n| match n {
            Node::Start => inf,
            Node::At(w) => -sinh(w),
            Node::End => -inf,
        })?;
        let b4 = EdgeTrack {
            edge: Edge::B4,
            params: vec![inf, T::zero()],
            values: vec![one, one],
            track: unwrap(&[one.det(), one.det()])?,
        };
        Ok(Self {
            edges: vec![b1, b2, b3, b4],
        })
    }

    /// `[φ₁, φ₂, φ₃, φ₄]` in traversal direction.
    pub fn variations(&self) -> [T; 4] {
        let mut out = [T::zero(); 4];
        for (o, e) in out.iter_mut().zip(&self.edges) {
            *o = e.variation();
        }
        out
    }

    /// `Σφ_j / 2π`, summed exactly.
    pub fn raw_winding(&self) -> T {
        let total = exact_sum(self.edges.iter().flat_map(|e| e.track.steps().iter().copied()));
        total / T::TAU()
    }

    /// The loop traversed in the opposite sense.
    pub fn reversed(&self) -> Result<Self> {
        let edges = self
            .edges
            .iter()
            .rev()
            .map(|e| e.reversed())
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { edges })
    }

    pub fn sample_count(&self) -> usize {
        self.edges.iter().map(|e| e.len()).sum()
    }
}

/// Samples one edge on an increasing native grid `[lo, hi]`, with the analytic
/// values `start` and `end` attached at both ends.
///
/// The range is widened (up to `±cap`) until the outermost interior samples
/// are within `max_step` of the analytic end values at two consecutive
/// widening steps, then neighbouring samples are bisected until each pair is
/// within `max_step` in Frobenius norm and below `π/2` in det phase.
#[allow(clippy::too_many_arguments)]
fn sample_edge<T: Real>(
    edge: Edge,
    f: &(impl Fn(T) -> Matrix2<T> + Sync),
    start: Matrix2<T>,
    end: Matrix2<T>,
    range: (f64, f64),
    cap: f64,
    opts: SamplingOptions,
    param: impl Fn(Node<T>) -> T,
) -> Result<EdgeTrack<T>> {
    let max_step = T::lit(opts.max_step);
    let close = |a: &Matrix2<T>, b: &Matrix2<T>| (*a - *b).norm() <= max_step;
    let (mut lo, mut hi) = range;
    let widen = (range.1 - range.0) / 8.0;
    loop {
        let ok = close(&f(T::lit(lo)), &start) && close(&f(T::lit(lo + widen)), &start);
        if ok {
            break;
        }
        if lo <= -cap {
            return Err(Error::NonConvergence(format!(
                "edge {edge:?} does not reach its start value within the parameter cap"
            )));
        }
        lo = (lo - widen).max(-cap);
    }
    loop {
        let ok = close(&f(T::lit(hi)), &end) && close(&f(T::lit(hi - widen)), &end);
        if ok {
            break;
        }
        if hi >= cap {
            return Err(Error::NonConvergence(format!(
                "edge {edge:?} does not reach its end value within the parameter cap"
            )));
        }
        hi = (hi + widen).min(cap);
    }
    // Widening keeps the sample density of the initial range.
    let n = ((opts.initial as f64 - 1.0) * (hi - lo) / (range.1 - range.0)).ceil() as usize + 1;
    let mut nodes: Vec<T> = (0..n)
        .map(|k| T::lit(lo + (hi - lo) * k as f64 / (n - 1) as f64))
        .collect();
    let mut values: Vec<Matrix2<T>> = nodes.par_iter().map(|&s| f(s)).collect();
    let limit = T::FRAC_PI_2();
    let needs_split = |a: &Matrix2<T>, b: &Matrix2<T>| {
        !close(a, b) || crate::scalar::phase_step(a.det(), b.det()).abs() >= limit
    };
    loop {
        let split: Vec<usize> = (0..nodes.len() - 1)
            .filter(|&k| needs_split(&values[k], &values[k + 1]))
            .collect();
        if split.is_empty() {
            break;
        }
        if nodes.len() + split.len() > opts.max_samples {
            return Err(Error::NonConvergence(format!(
                "edge {edge:?} needs more than {} samples",
                opts.max_samples
            )));
        }
        let mids: Vec<T> = split
            .iter()
            .map(|&k| (nodes[k] + nodes[k + 1]) / T::lit(2.0))
            .collect();
        let mid_values: Vec<Matrix2<T>> = mids.par_iter().map(|&s| f(s)).collect();
        let mut new_nodes = Vec::with_capacity(nodes.len() + mids.len());
        let mut new_values = Vec::with_capacity(nodes.len() + mids.len());
        let mut j = 0;
        for k in 0..nodes.len() {
            new_nodes.push(nodes[k]);
            new_values.push(values[k]);
            if j < split.len() && split[j] == k {
                new_nodes.push(mids[j]);
                new_values.push(mid_values[j]);
                j += 1;
            }
        }
        nodes = new_nodes;
        values = new_values;
    }
    let mut params = Vec::with_capacity(nodes.len() + 2);
    params.push(param(Node::Start));
    params.extend(nodes.iter().map(|&s| param(Node::At(s))));
    params.push(param(Node::End));
    let mut all = Vec::with_capacity(values.len() + 2);
    all.push(start);
    all.extend(values);
    all.push(end);
    let dets: Vec<Complex<T>> = all.iter().map(|m| m.det()).collect();
    Ok(EdgeTrack {
        edge,
        params,
        values: all,
        track: unwrap(&dets)?,
    })
}

/// Outcome of [`total_winding`].
#[derive(Debug, Clone, Serialize)]
#[serde(bound(serialize = "T: Real"))]
pub struct LevinsonReport<T> {
    pub alpha: T,
    /// `[φ₁, φ₂, φ₃, φ₄]`.
    pub phi: [T; 4],
    pub wind: i64,
    pub bound_count: usize,
    /// `None` when the pair sits on a boundary between table rows.
    pub case_label: Option<CaseLabel<T>>,
    /// Table prediction for `[φ₁, φ₂, φ₃]` when a row applies.
    pub predicted: Option<[T; 3]>,
    pub max_corner_residual: T,
    pub integer_residual: T,
    pub samples: usize,
}

impl<T: Real> LevinsonReport<T> {
    /// `wind = −#σ_p` and, when a table row applies, every `φ_j` within
    /// `1e−6·(1 + |prediction|)` of the row.
    pub fn holds(&self) -> bool {
        let count_ok = self.wind == -(self.bound_count as i64);
        let table_ok = self.predicted.map_or(true, |p| {
            p.iter()
                .zip(&self.phi)
                .all(|(&want, &got)| (got - want).abs() <= T::tol(1e-6) * (T::one() + want.abs()))
        });
        count_ok && table_ok && self.phi[3] == T::zero()
    }
}

/// Samples the boundary loop, sums the edge variations, and compares with
/// the bound-state count and the table prediction.
pub fn total_winding<T: Real>(pair: &AdmissiblePair<T>, alpha: Flux<T>) -> Result<LevinsonReport<T>> {
    total_winding_with(pair, alpha, SamplingOptions::default()).map(|(r, _)| r)
}

/// [`total_winding`] with explicit sampling options; also returns the loop.
pub fn total_winding_with<T: Real>(
    pair: &AdmissiblePair<T>,
    alpha: Flux<T>,
    opts: SamplingOptions,
) -> Result<(LevinsonReport<T>, BoundaryLoop<T>)> {
    let set = EdgeFunctionSet::new(pair, alpha)?;
    let lp = BoundaryLoop::sample_with(&set, opts)?;
    let report = report_for(pair, alpha, &set, &lp)?;
    Ok((report, lp))
}

fn report_for<T: Real>(
    pair: &AdmissiblePair<T>,
    alpha: Flux<T>,
    set: &EdgeFunctionSet<T>,
    lp: &BoundaryLoop<T>,
) -> Result<LevinsonReport<T>> {
    let raw = lp.raw_winding();
    let wind = raw.round();
    let integer_residual = (raw - wind).abs();
    if integer_residual > T::tol(1e-6) {
        return Err(Error::IntegerDrift {
            residual: integer_residual.as_f64(),
        });
    }
    let classification = match classify(pair, alpha) {
        Ok(c) => Some(c),
        Err(Error::DegenerateCase(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(LevinsonReport {
        alpha: alpha.value(),
        phi: lp.variations(),
        wind: wind.to_i64().unwrap_or(i64::MAX),
        bound_count: negative_count_cdstar(pair),
        case_label: classification.map(|c| c.label),
        predicted: classification.map(|c| c.phases),
        max_corner_residual: set.corner_residual(),
        integer_residual,
        samples: lp.sample_count(),
    })
}

/// `(holds, report)`; see [`LevinsonReport::holds`].
pub fn levinson_check<T: Real>(pair: &AdmissiblePair<T>, alpha: Flux<T>) -> Result<(bool, LevinsonReport<T>)> {
    let r = total_winding(pair, alpha)?;
    Ok((r.holds(), r))
}

/// Gauss–Legendre nodes and weights on `[−1, 1]` by Newton iteration on `P_n`.
fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// `Im` of the Stirling series for `log Γ(a + ix)`.
fn stirling_im(a: f64, x: f64) -> f64 {
    const B: [f64; 8] = [
        1.0 / 6.0,
        -1.0 / 30.0,
        1.0 / 42.0,
        -1.0 / 30.0,
        5.0 / 66.0,
        -691.0 / 2730.0,
        7.0 / 6.0,
        -3617.0 / 510.0,
    ];
    let z = Complex::new(a, x);
    let mut s = (z - 0.5) * z.ln() - z;
    let z2 = z * z;
    let mut zp = z;
    for (k, b) in B.iter().enumerate() {
        let k = (k + 1) as f64;
        s += b / (2.0 * k * (2.0 * k - 1.0)) / zp;
        zp *= z2;
    }
    s.im
}

/// `Var[φ_{a,b}]` for `φ_{a,b}(x) = [Γ(a+ix)/Γ(a−ix)]·[Γ(b−ix)/Γ(b+ix)]`.
///
/// The integrand `2 Re[ψ(a+ix) − ψ(b+ix)]` is even; `[0, X]` is integrated with
/// 20-point Gauss–Legendre on geometrically growing panels and `[X, ∞)` is
/// added from the Stirling series of `Im log Γ`. The exact value is `2π(a−b)`.
pub fn var_phi_ab(a: f64, b: f64) -> f64 {
    var_phi_ab_cut(a, b, 60.0)
}

/// [`var_phi_ab`] with the cut `X` made explicit.
pub fn var_phi_ab_cut(a: f64, b: f64, cut: f64) -> f64 {
    assert!(a > 0.0 && b > 0.0, "var_phi_ab needs a, b > 0");
    let gl = gauss_legendre(20);
    let integrand = |x: f64| {
        let d = digamma_unchecked(Complex::new(a, x)) - digamma_unchecked(Complex::new(b, x));
        2.0 * d.re
    };
    let mut parts = Vec::new();
    let mut lo = 0.0;
    let mut h = a.min(b).min(1.0) / 64.0;
    while lo < cut {
        let hi = (lo + h).min(cut);
        let (mid, half) = ((lo + hi) / 2.0, (hi - lo) / 2.0);
        for &(t, w) in &gl {
            parts.push(w * half * integrand(mid + half * t));
        }
        lo = hi;
        h *= 2.0;
    }
    let body = exact_sum(parts);
    let tail = 2.0 * ((a - b) * std::f64::consts::FRAC_PI_2 - (stirling_im(a, cut) - stirling_im(b, cut)));
    2.0 * (body + tail)
}
