//! Command-line value grammar for matrices, complex numbers and grids.

use levinson_ab::{Complex64, Mat2};

/// `I`, `-I`, `0`, or eight comma-separated reals `re,im` per entry, row-major.
pub fn parse_matrix(s: &str) -> Result<Mat2, String> {
    match s.trim() {
        "I" | "1" => return Ok(Mat2::identity()),
        "-I" | "-1" => return Ok(Mat2::real_diag(-1.0, -1.0)),
        "0" => return Ok(Mat2::zero()),
        _ => {}
    }
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| format!("bad matrix '{s}': expected I, -I, 0 or 8 comma-separated reals"))?;
    let v: [f64; 8] = v
        .try_into()
        .map_err(|v: Vec<f64>| format!("bad matrix '{s}': expected 8 reals, got {}", v.len()))?;
    if v.iter().any(|x| !x.is_finite()) {
        return Err(format!("bad matrix '{s}': entries must be finite"));
    }
    Ok(Mat2::from_reals(v))
}

/// `i`, `-i`, a real, `re,im`, `a+bi`, `a-bi`, `bi`.
pub fn parse_complex(s: &str) -> Result<Complex64, String> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || format!("bad complex number '{s}'");
    if let Some((re, im)) = t.split_once(',') {
        return Ok(Complex64::new(
            re.parse().map_err(|_| bad())?,
            im.parse().map_err(|_| bad())?,
        ));
    }
    if let Some(body) = t.strip_suffix('i') {
        // Split at the last sign that is not an exponent sign or leading sign.
        let bytes = body.as_bytes();
        let split = (1..bytes.len())
            .rev()
            .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
        let (re, im) = match split {
            Some(k) => (&body[..k], &body[k..]),
            None => ("0", body),
        };
        let im = match im {
            "" | "+" => 1.0,
            "-" => -1.0,
            x => x.parse().map_err(|_| bad())?,
        };
        return Ok(Complex64::new(re.parse().map_err(|_| bad())?, im));
    }
    Ok(Complex64::new(t.parse().map_err(|_| bad())?, 0.0))
}

/// `lo:hi:n`, `n ≥ 2` points spaced logarithmically in `[lo, hi]`.
pub fn parse_kappa_grid(s: &str) -> Result<Vec<f64>, String> {
    let bad = || format!("bad kappa grid '{s}': expected lo:hi:n with 0 < lo < hi and n >= 2");
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, n] = parts[..] else {
        return Err(bad());
    };
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    let n: usize = n.trim().parse().map_err(|_| bad())?;
    if !(lo > 0.0 && hi > lo && hi.is_finite() && n >= 2) {
        return Err(bad());
    }
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..n)
        .map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp())
        .collect())
}

/// `NρxNφ`.
pub fn parse_grid2(s: &str) -> Result<(usize, usize), String> {
    let bad = || format!("bad grid '{s}': expected NrhoxNphi");
    let (a, b) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}
