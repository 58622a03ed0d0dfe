//! Limited-memory BFGS with backtracking line search.

use std::collections::VecDeque;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Status {
    TargetReached,
    GradientTol,
    Stalled,
    MaxIter,
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct Options {
    pub max_iter: usize,
    pub memory: usize,
    pub grad_tol: f64,
    /// Stop as soon as the objective drops to this value.
    pub target: f64,
    /// Stop when the objective improved by less than `stall_rel` (relative)
    /// over the last `stall_window` iterations.
    pub stall_window: usize,
    pub stall_rel: f64,
}

#[derive(Clone, Debug)]
pub(crate) struct Outcome {
    pub x: Vec<f64>,
    pub f: f64,
    pub status: Status,
    /// `(iteration, objective, gradient norm)`
    pub log: Vec<(usize, f64, f64)>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn minimize(mut fg: impl FnMut(&[f64]) -> (f64, Vec<f64>), x0: Vec<f64>, opts: &Options) -> Outcome {
    let mut x = x0;
    let (mut f, mut g) = fg(&x);
    let mut hist: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut log = vec![(0, f, dot(&g, &g).sqrt())];
    let mut recent = VecDeque::from([f]);

    for iter in 1..=opts.max_iter {
        let gnorm = dot(&g, &g).sqrt();
        if f <= opts.target {
            return Outcome { x, f, status: Status::TargetReached, log };
        }
        if gnorm <= opts.grad_tol || !gnorm.is_finite() {
            return Outcome { x, f, status: Status::GradientTol, log };
        }

        // two-loop recursion
        let mut d: Vec<f64> = g.iter().map(|v| -v).collect();
        let mut alphas = Vec::with_capacity(hist.len());
        for (s, y, rho) in hist.iter().rev() {
            let a = rho * dot(s, &d);
            d.iter_mut().zip(y).for_each(|(di, yi)| *di -= a * yi);
            alphas.push(a);
        }
        let gamma = hist.back().map_or(1.0 / gnorm.max(1.0), |(s, y, _)| dot(s, y) / dot(y, y));
        d.iter_mut().for_each(|di| *di *= gamma);
        for ((s, y, rho), a) in hist.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &d);
            d.iter_mut().zip(s).for_each(|(di, si)| *di += (a - b) * si);
        }
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            hist.clear();
            d = g.iter().map(|v| -v / gnorm.max(1.0)).collect();
            slope = dot(&g, &d);
        }

        let mut t = 1.0;
        let accepted = loop {
            let xt: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + t * di).collect();
            let (ft, gt) = fg(&xt);
            if ft.is_finite() && ft <= f + 1e-4 * t * slope {
                break Some((xt, ft, gt));
            }
            t *= 0.5;
            if t < 1e-12 {
                break None;
            }
        };
        let Some((xn, fnew, gn)) = accepted else {
            if hist.is_empty() {
                return Outcome { x, f, status: Status::Stalled, log };
            }
            hist.clear();
            continue;
        };

        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-300 {
            if hist.len() == opts.memory {
                hist.pop_front();
            }
            hist.push_back((s, y, 1.0 / sy));
        }
        x = xn;
        f = fnew;
        g = gn;
        log.push((iter, f, dot(&g, &g).sqrt()));

        recent.push_back(f);
        if recent.len() > opts.stall_window {
            let old = recent.pop_front().unwrap_or(f);
            if old - f <= opts.stall_rel * old.abs() {
                return Outcome { x, f, status: Status::Stalled, log };
            }
        }
    }
    let status = if f <= opts.target { Status::TargetReached } else { Status::MaxIter };
    Outcome { x, f, status, log }
}
