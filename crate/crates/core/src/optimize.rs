//! Derivative-free minimization in two dimensions.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadResult {
    pub x: [f64; 2],
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

type Point = [f64; 2];

fn lerp(a: &Point, b: &Point, t: f64) -> Point {
    [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
}

fn distance(a: &Point, b: &Point) -> f64 {
    libm::hypot(a[0] - b[0], a[1] - b[1])
}

/// Nelder–Mead simplex search for a minimum of `f`.
///
/// The initial simplex is `x0`, `x0 + step[0]·e₁`, `x0 + step[1]·e₂`. Ties never
/// displace the incumbent, so the returned value is at most `f(x0)`. Stops once
/// the simplex diameter falls below `diameter_tol` or `max_evals` is spent.
pub fn nelder_mead<F: FnMut(Point) -> f64>(
    mut f: F,
    x0: Point,
    step: Point,
    max_evals: usize,
    diameter_tol: f64,
) -> NelderMeadResult {
    let mut evals = 0;
    let mut eval = |p: Point, evals: &mut usize| {
        *evals += 1;
        let v = f(p);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut s = [
        (x0, eval(x0, &mut evals)),
        ([x0[0] + step[0], x0[1]], 0.0),
        ([x0[0], x0[1] + step[1]], 0.0),
    ];
    s[1].1 = eval(s[1].0, &mut evals);
    s[2].1 = eval(s[2].0, &mut evals);
    let mut converged = false;
    loop {
        s.sort_by(|a, b| a.1.total_cmp(&b.1));
        let diameter = distance(&s[0].0, &s[1].0)
            .max(distance(&s[0].0, &s[2].0))
            .max(distance(&s[1].0, &s[2].0));
        if diameter < diameter_tol {
            converged = true;
            break;
        }
        if evals >= max_evals {
            break;
        }
        let c = lerp(&s[0].0, &s[1].0, 0.5);
        let worst = s[2];
        let xr = lerp(&worst.0, &c, 2.0);
        let fr = eval(xr, &mut evals);
        if fr < s[0].1 {
            let xe = lerp(&worst.0, &c, 3.0);
            let fe = eval(xe, &mut evals);
            s[2] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < s[1].1 {
            s[2] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < worst.1 {
            let xc = lerp(&c, &xr, 0.5);
            (xc, eval(xc, &mut evals))
        } else {
            let xc = lerp(&c, &worst.0, 0.5);
            (xc, eval(xc, &mut evals))
        };
        if fc < fr.min(worst.1) {
            s[2] = (xc, fc);
            continue;
        }
        for i in 1..3 {
            let p = lerp(&s[0].0, &s[i].0, 0.5);
            s[i] = (p, eval(p, &mut evals));
        }
    }
    NelderMeadResult {
        x: s[0].0,
        value: s[0].1,
        evaluations: evals,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let r = nelder_mead(
            |p| (1.0 - p[0]).powi(2) + 100.0 * (p[1] - p[0] * p[0]).powi(2),
            [-1.2, 1.0],
            [0.1, 0.1],
            2000,
            1e-10,
        );
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-4 && (r.x[1] - 1.0).abs() < 1e-4, "{:?}", r.x);
    }

    #[test]
    fn flat_objective_keeps_start() {
        let r = nelder_mead(|_| 3.0, [0.2, 0.7], [0.01, 0.01], 200, 1e-6);
        assert_eq!(r.x, [0.2, 0.7]);
        assert!(r.converged);
    }

    #[test]
    fn budget_exhaustion_is_flagged() {
        let r = nelder_mead(|p| p[0] * p[0] + p[1] * p[1], [5.0, 5.0], [1.0, 1.0], 10, 1e-12);
        assert!(!r.converged);
        assert!(r.evaluations <= 12);
        assert!(r.value <= 50.0);
    }

    #[test]
    fn never_worse_than_start() {
        let f = |p: Point| libm::sin(7.0 * p[0]) * libm::cos(5.0 * p[1]) + 0.1 * p[0];
        let r = nelder_mead(f, [0.3, -0.4], [0.05, 0.05], 200, 1e-8);
        assert!(r.value <= f([0.3, -0.4]));
    }
}
