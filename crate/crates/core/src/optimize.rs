//! Derivative-free minimisation: adaptive Nelder-Mead and Halton start points.
//!
//! Non-finite objective values mark infeasible points; the simplex treats them
//! as worse than any finite value and never accepts them as a best point.

/// First primes, one Halton base per dimension.
const PRIMES: [u32; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Radical inverse of `index` in `base`.
fn radical_inverse(mut index: u64, base: u32) -> f64 {
    let b = base as f64;
    let mut inv = 1.0 / b;
    let mut out = 0.0;
    while index > 0 {
        out += (index % base as u64) as f64 * inv;
        index /= base as u64;
        inv /= b;
    }
    out
}

/// Point `index` of the Halton sequence in `[0, 1)^dim`.
///
/// # Panics
/// If `dim` exceeds the number of tabulated prime bases (16).
pub fn halton(index: u64, dim: usize) -> Vec<f64> {
    assert!(dim <= PRIMES.len(), "halton: at most {} dimensions", PRIMES.len());
    PRIMES[..dim].iter().map(|&p| radical_inverse(index, p)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions {
    /// Evaluation budget shared by all restarts.
    pub max_evals: usize,
    /// Stop when `f_worst - f_best <= f_tol_abs + f_tol_rel * |f_best|` and
    /// every vertex lies within `x_tol` of the best one (max norm).
    pub f_tol_rel: f64,
    pub f_tol_abs: f64,
    pub x_tol: f64,
    /// Fresh simplices built around the incumbent after convergence.
    pub max_restarts: usize,
    /// A value at or below this counts as converged immediately.
    pub f_target: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions {
            max_evals: 20_000,
            f_tol_rel: 1e-12,
            f_tol_abs: 0.0,
            x_tol: 1e-9,
            max_restarts: 8,
            f_target: f64::NEG_INFINITY,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub evaluations: usize,
    /// The tolerance test fired before the evaluation budget ran out.
    pub converged: bool,
}

fn key(f: f64) -> f64 {
    if f.is_nan() {
        f64::INFINITY
    } else {
        f
    }
}

struct Counter<'a, F> {
    f: &'a mut F,
    evals: usize,
    best_x: Vec<f64>,
    best_f: f64,
}

impl<F: FnMut(&[f64]) -> f64> Counter<'_, F> {
    fn eval(&mut self, x: &[f64]) -> f64 {
        self.evals += 1;
        let v = key((self.f)(x));
        if v < self.best_f {
            self.best_f = v;
            self.best_x.clear();
            self.best_x.extend_from_slice(x);
        }
        v
    }
}

/// One simplex run; returns whether the tolerance test fired.
fn simplex_run<F: FnMut(&[f64]) -> f64>(
    counter: &mut Counter<'_, F>,
    start: &[f64],
    scale: &[f64],
    opts: &NelderMeadOptions,
) -> bool {
    let n = start.len();
    let nf = n as f64;
    // dimension-adaptive coefficients
    let (alpha, gamma, rho, sigma) = (1.0, 1.0 + 2.0 / nf, 0.75 - 0.5 / nf, 1.0 - 1.0 / nf);

    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    let mut vals: Vec<f64> = Vec::with_capacity(n + 1);
    pts.push(start.to_vec());
    vals.push(counter.eval(start));
    for i in 0..n {
        let mut best_vertex = None;
        for step in [scale[i], -scale[i], 0.5 * scale[i], -0.5 * scale[i]] {
            let mut p = start.to_vec();
            p[i] += step;
            let v = counter.eval(&p);
            best_vertex = Some((p, v));
            if v.is_finite() {
                break;
            }
        }
        let (p, v) = best_vertex.expect("at least one trial vertex");
        pts.push(p);
        vals.push(v);
    }

    let mut order: Vec<usize> = (0..=n).collect();
    loop {
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        let (best, worst, second) = (order[0], order[n], order[n - 1]);
        let spread_f = vals[worst] - vals[best];
        let spread_x = pts
            .iter()
            .flat_map(|p| p.iter().zip(&pts[best]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if vals[best] <= opts.f_target {
            return true;
        }
        if vals[best].is_finite()
            && spread_f <= opts.f_tol_abs + opts.f_tol_rel * vals[best].abs()
            && spread_x <= opts.x_tol
        {
            return true;
        }
        if counter.evals >= opts.max_evals {
            return false;
        }

        let mut centroid = vec![0.0; n];
        for &i in &order[..n] {
            for (c, x) in centroid.iter_mut().zip(&pts[i]) {
                *c += x / nf;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&pts[worst])
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let xr = along(alpha);
        let fr = counter.eval(&xr);
        if fr < vals[best] {
            let xe = along(alpha * gamma);
            let fe = counter.eval(&xe);
            if fe < fr {
                pts[worst] = xe;
                vals[worst] = fe;
            } else {
                pts[worst] = xr;
                vals[worst] = fr;
            }
            continue;
        }
        if fr < vals[second] {
            pts[worst] = xr;
            vals[worst] = fr;
            continue;
        }
        let (xc, fc) = if fr < vals[worst] {
            let xc = along(alpha * rho);
            let fc = counter.eval(&xc);
            (xc, fc)
        } else {
            let xc = along(-rho);
            let fc = counter.eval(&xc);
            (xc, fc)
        };
        if fc < vals[worst].min(fr) {
            pts[worst] = xc;
            vals[worst] = fc;
            continue;
        }
        let anchor = pts[best].clone();
        for &i in &order[1..] {
            let shrunk: Vec<f64> = anchor
                .iter()
                .zip(&pts[i])
                .map(|(b, x)| b + sigma * (x - b))
                .collect();
            vals[i] = counter.eval(&shrunk);
            pts[i] = shrunk;
        }
    }
}

/// Minimise `f` from `start`, restarting with fresh simplices around the
/// incumbent until a restart no longer improves it.
///
/// `scale[i]` is the initial simplex edge along coordinate `i`.
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    start: &[f64],
    scale: &[f64],
    opts: &NelderMeadOptions,
) -> Minimum {
    assert_eq!(start.len(), scale.len(), "nelder_mead: start and scale lengths differ");
    let mut counter = Counter {
        f: &mut f,
        evals: 0,
        best_x: start.to_vec(),
        best_f: f64::INFINITY,
    };
    let mut converged = simplex_run(&mut counter, start, scale, opts);
    let mut restarts = 0;
    while converged
        && restarts < opts.max_restarts
        && counter.best_f.is_finite()
        && counter.best_f > opts.f_target
    {
        let before = counter.best_f;
        let from = counter.best_x.clone();
        converged = simplex_run(&mut counter, &from, scale, opts);
        restarts += 1;
        if before - counter.best_f <= opts.f_tol_abs + opts.f_tol_rel * before.abs() {
            break;
        }
    }
    Minimum {
        x: counter.best_x,
        f: counter.best_f,
        evaluations: counter.evals,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64]) -> f64 {
        x.windows(2)
            .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
            .sum()
    }

    #[test]
    fn halton_prefix() {
        assert_eq!(halton(1, 2), vec![0.5, 1.0 / 3.0]);
        assert_eq!(halton(2, 2), vec![0.25, 2.0 / 3.0]);
        let h3 = halton(3, 1)[0];
        assert!((h3 - 0.75).abs() < 1e-15);
    }

    #[test]
    fn minimises_rosenbrock() {
        let opts = NelderMeadOptions::default();
        let m = nelder_mead(rosenbrock, &[-1.2, 1.0], &[0.5, 0.5], &opts);
        assert!(m.converged);
        assert!(m.f < 1e-14, "{}", m.f);
        assert!((m.x[0] - 1.0).abs() < 1e-6 && (m.x[1] - 1.0).abs() < 1e-6);
        let m = nelder_mead(rosenbrock, &[0.0; 5], &[0.5; 5], &opts);
        assert!(m.f < 1e-10, "{}", m.f);
    }

    #[test]
    fn infeasible_region_is_avoided() {
        // minimum of (x - 2)^2 restricted to x <= 1
        let f = |x: &[f64]| if x[0] > 1.0 { f64::INFINITY } else { (x[0] - 2.0).powi(2) };
        let m = nelder_mead(f, &[0.0], &[0.3], &NelderMeadOptions::default());
        assert!(m.x[0] <= 1.0 && (m.x[0] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn target_stops_early() {
        let opts = NelderMeadOptions {
            f_target: 1e-3,
            ..NelderMeadOptions::default()
        };
        let m = nelder_mead(rosenbrock, &[-1.2, 1.0], &[0.5, 0.5], &opts);
        assert!(m.converged && m.f <= 1e-3 && m.f > 1e-12);
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let opts = NelderMeadOptions {
            max_evals: 20,
            ..NelderMeadOptions::default()
        };
        let m = nelder_mead(rosenbrock, &[-1.2, 1.0], &[0.5, 0.5], &opts);
        assert!(!m.converged);
        assert!(m.evaluations <= 25);
    }

    #[test]
    fn reported_value_is_best_seen() {
        let mut seen = f64::INFINITY;
        let m = nelder_mead(
            |x: &[f64]| {
                let v = (x[0] - 0.3).powi(2) + (x[1] + 0.1).powi(2);
                seen = seen.min(v);
                v
            },
            &[1.0, 1.0],
            &[0.2, 0.2],
            &NelderMeadOptions::default(),
        );
        assert_eq!(m.f, seen);
    }
}
