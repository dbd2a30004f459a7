//! Derivative-free simplex minimizer (Nelder-Mead).
//!
//! Small, deterministic, and tolerant of +inf plateaus, which the KL
//! objective uses to fence off the infeasible region.

pub(crate) struct NelderMead {
    /// Relative simplex-diameter tolerance.
    pub rel_tol: f64,
    /// Objective-evaluation budget.
    pub max_evals: u64,
}

pub(crate) struct NmOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: u64,
    pub converged: bool,
}

const ALPHA: f64 = 1.0; // reflection
const GAMMA: f64 = 2.0; // expansion
const RHO: f64 = 0.5; // contraction
const SIGMA: f64 = 0.5; // shrink

impl NelderMead {
    pub fn minimize(&self, f: &mut dyn FnMut(&[f64]) -> f64, x0: &[f64]) -> NmOutcome {
        let n = x0.len();
        let mut evals: u64 = 0;
        let mut eval = |x: &[f64], evals: &mut u64| -> f64 {
            *evals += 1;
            let v = f(x);
            if v.is_nan() {
                f64::INFINITY
            } else {
                v
            }
        };

        // Initial simplex: relative steps so widely different parameter
        // scales (d0 ~ 1e4, d1 ~ 1) start with usable geometry.
        let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
        simplex.push(x0.to_vec());
        for i in 0..n {
            let mut v = x0.to_vec();
            let step = if v[i].abs() > 1e-8 {
                0.05 * v[i].abs()
            } else {
                0.25
            };
            v[i] += step;
            simplex.push(v);
        }
        let mut values: Vec<f64> = simplex.iter().map(|v| eval(v, &mut evals)).collect();

        loop {
            // Order best..worst.
            let mut order: Vec<usize> = (0..=n).collect();
            order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
            let simplex_sorted: Vec<Vec<f64>> = order.iter().map(|&i| simplex[i].clone()).collect();
            let values_sorted: Vec<f64> = order.iter().map(|&i| values[i]).collect();
            simplex = simplex_sorted;
            values = values_sorted;

            if !values[0].is_finite() {
                // Entire simplex sits on the infinite plateau; nothing to do.
                return NmOutcome {
                    x: simplex[0].clone(),
                    value: values[0],
                    evaluations: evals,
                    converged: false,
                };
            }

            let diameter = (1..=n)
                .map(|v| {
                    (0..n)
                        .map(|i| (simplex[v][i] - simplex[0][i]).abs() / (1.0 + simplex[0][i].abs()))
                        .fold(0.0, f64::max)
                })
                .fold(0.0, f64::max);
            if diameter < self.rel_tol {
                return NmOutcome {
                    x: simplex[0].clone(),
                    value: values[0],
                    evaluations: evals,
                    converged: true,
                };
            }
            if evals >= self.max_evals {
                return NmOutcome {
                    x: simplex[0].clone(),
                    value: values[0],
                    evaluations: evals,
                    converged: false,
                };
            }

            let centroid: Vec<f64> = (0..n)
                .map(|i| simplex[..n].iter().map(|v| v[i]).sum::<f64>() / n as f64)
                .collect();
            let worst = simplex[n].clone();
            let reflected: Vec<f64> = (0..n)
                .map(|i| centroid[i] + ALPHA * (centroid[i] - worst[i]))
                .collect();
            let fr = eval(&reflected, &mut evals);

            if fr < values[0] {
                let expanded: Vec<f64> = (0..n)
                    .map(|i| centroid[i] + GAMMA * (centroid[i] - worst[i]))
                    .collect();
                let fe = eval(&expanded, &mut evals);
                if fe < fr {
                    simplex[n] = expanded;
                    values[n] = fe;
                } else {
                    simplex[n] = reflected;
                    values[n] = fr;
                }
                continue;
            }
            if fr < values[n - 1] {
                simplex[n] = reflected;
                values[n] = fr;
                continue;
            }

            let (contracted, threshold): (Vec<f64>, f64) = if fr < values[n] {
                // Outside contraction toward the reflected point.
                (
                    (0..n)
                        .map(|i| centroid[i] + RHO * (reflected[i] - centroid[i]))
                        .collect(),
                    fr,
                )
            } else {
                // Inside contraction toward the worst point.
                (
                    (0..n)
                        .map(|i| centroid[i] + RHO * (worst[i] - centroid[i]))
                        .collect(),
                    values[n],
                )
            };
            let fc = eval(&contracted, &mut evals);
            if fc <= threshold {
                simplex[n] = contracted;
                values[n] = fc;
                continue;
            }

            // Shrink toward the best vertex.
            for v in 1..=n {
                for i in 0..n {
                    simplex[v][i] = simplex[0][i] + SIGMA * (simplex[v][i] - simplex[0][i]);
                }
                values[v] = eval(&simplex[v].clone(), &mut evals);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimizes_quadratic_bowl() {
        let nm = NelderMead {
            rel_tol: 1e-9,
            max_evals: 100_000,
        };
        let mut f = |x: &[f64]| (x[0] - 3.0).powi(2) + 10.0 * (x[1] + 1.5).powi(2);
        let out = nm.minimize(&mut f, &[0.0, 0.0]);
        assert!(out.converged);
        assert!((out.x[0] - 3.0).abs() < 1e-6);
        assert!((out.x[1] + 1.5).abs() < 1e-6);
    }

    #[test]
    fn handles_scale_disparity() {
        // Minimum at (1e4, 0.2), curvatures differing by 8 orders of magnitude.
        let nm = NelderMead {
            rel_tol: 1e-8,
            max_evals: 100_000,
        };
        let mut f = |x: &[f64]| 1e-6 * (x[0] - 1.0e4).powi(2) + 1e2 * (x[1] - 0.2).powi(2);
        let out = nm.minimize(&mut f, &[5.0e3, 1.0]);
        assert!(out.converged);
        assert!((out.x[0] - 1.0e4).abs() / 1.0e4 < 1e-4, "x0={}", out.x[0]);
        assert!((out.x[1] - 0.2).abs() < 1e-4, "x1={}", out.x[1]);
    }

    #[test]
    fn escapes_infinite_fence() {
        // Feasible region x0 > 1; minimum at x0 = 2.
        let nm = NelderMead {
            rel_tol: 1e-9,
            max_evals: 100_000,
        };
        let mut f = |x: &[f64]| {
            if x[0] <= 1.0 {
                f64::INFINITY
            } else {
                (x[0] - 2.0).powi(2) + x[1].powi(2)
            }
        };
        let out = nm.minimize(&mut f, &[1.2, 0.7]);
        assert!(out.converged);
        assert!((out.x[0] - 2.0).abs() < 1e-6);
    }

    #[test]
    fn gives_up_on_all_infinite_simplex() {
        let nm = NelderMead {
            rel_tol: 1e-9,
            max_evals: 1_000,
        };
        let mut f = |_: &[f64]| f64::INFINITY;
        let out = nm.minimize(&mut f, &[0.0, 0.0]);
        assert!(!out.converged);
        assert!(out.value.is_infinite());
    }
}
