//! Derivative-free minimizers: Nelder–Mead with restarts and golden-section
//! search.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions {
    /// Spread of objective values across the simplex at convergence.
    pub f_tol: f64,
    /// Largest coordinate distance from the best vertex at convergence.
    pub x_tol: f64,
    pub max_evals: usize,
    /// Fresh simplices built around the incumbent after convergence.
    pub restarts: usize,
    pub initial_step: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self { f_tol: 1e-8, x_tol: 1e-7, max_evals: 20_000, restarts: 5, initial_step: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
    pub converged: bool,
    pub restarts: usize,
}

/// Minimizes `f` from `x0`. Non-finite objective values count as `+∞`.
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(mut f: F, x0: &[f64], opts: &NelderMeadOptions) -> Minimum {
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };
    if x0.is_empty() {
        let v = eval(x0, &mut evals);
        return Minimum { x: Vec::new(), f: v, evals, converged: true, restarts: 0 };
    }
    let mut best_x = x0.to_vec();
    let mut best_f = eval(x0, &mut evals);
    let mut converged = false;
    let mut restarts = 0;
    for round in 0..=opts.restarts {
        let step = if round == 0 { opts.initial_step } else { opts.initial_step * 0.5_f64.powi(round as i32) };
        let (x, fx, ok) = run(&mut eval, &best_x, best_f, step, opts, &mut evals);
        let gain = best_f - fx;
        if fx <= best_f {
            best_x = x;
            best_f = fx;
        }
        converged = ok;
        if round > 0 {
            restarts = round;
        }
        if !ok || evals >= opts.max_evals || (round > 0 && gain.abs() <= opts.f_tol) {
            break;
        }
    }
    Minimum { x: best_x, f: best_f, evals, converged, restarts }
}

fn run<E: FnMut(&[f64], &mut usize) -> f64>(
    eval: &mut E,
    x0: &[f64],
    f0: f64,
    step: f64,
    opts: &NelderMeadOptions,
    evals: &mut usize,
) -> (Vec<f64>, f64, bool) {
    let n = x0.len();
    let nf = n as f64;
    // dimension-adaptive coefficients
    let (alpha, gamma, rho, sigma) = (1.0, 1.0 + 2.0 / nf, 0.75 - 0.5 / nf, 1.0 - 1.0 / nf.max(2.0));
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), f0));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += step * x0[i].abs().max(1.0);
        let v = eval(&x, evals);
        simplex.push((x, v));
    }
    loop {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
        let fb = simplex[0].1;
        let fw = simplex[n].1;
        let xspread = simplex[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if (fw - fb) <= opts.f_tol && xspread <= opts.x_tol {
            return (simplex[0].0.clone(), fb, true);
        }
        if *evals >= opts.max_evals {
            return (simplex[0].0.clone(), fb, false);
        }
        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += v / nf;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            centroid.iter().zip(&simplex[n].0).map(|(c, w)| c + t * (c - w)).collect()
        };
        let xr = along(alpha);
        let fr = eval(&xr, evals);
        if fr < fb {
            let xe = along(alpha * gamma);
            let fe = eval(&xe, evals);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < fw {
            let xc = along(alpha * rho);
            let fc = eval(&xc, evals);
            (xc, fc)
        } else {
            let xc = along(-rho);
            let fc = eval(&xc, evals);
            (xc, fc)
        };
        if fc < fw.min(fr) {
            simplex[n] = (xc, fc);
            continue;
        }
        let xb = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let x: Vec<f64> = xb.iter().zip(&vertex.0).map(|(b, v)| b + sigma * (v - b)).collect();
            let v = eval(&x, evals);
            *vertex = (x, v);
        }
    }
}

/// Minimizes a unimodal `f` on `[lo, hi]`; returns the best point seen.
pub fn golden_section<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let g = 0.5 * (5.0_f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let (mut best_x, mut best_f) = if fc <= fd { (c, fc) } else { (d, fd) };
    while (b - a) > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
            if fc < best_f {
                best_x = c;
                best_f = fc;
            }
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
            if fd < best_f {
                best_x = d;
                best_f = fd;
            }
        }
    }
    for x in [lo, hi] {
        let v = f(x);
        if v < best_f {
            best_x = x;
            best_f = v;
        }
    }
    (best_x, best_f)
}
