//! Gauss-Legendre panels and compensated summation.

#[derive(Clone, Debug)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// `n`-point rule on `[-1, 1]`, nodes by Newton iteration on `P_n`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                let pn = if n == 1 { x } else { p1 };
                let pm = if n == 1 { 1.0 } else { p0 };
                dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
                let dx = pn / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped onto offsets within `[0, h]`.
    pub fn scaled(&self, h: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (0.5 * h * (x + 1.0), 0.5 * h * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        neumaier_sum(self.scaled(b - a).map(|(d, w)| w * f(a + d)))
    }

    /// Sum over consecutive panels between sorted breakpoints.
    pub fn integrate_panels<F: FnMut(f64) -> f64>(&self, breaks: &[f64], mut f: F) -> f64 {
        neumaier_sum(
            breaks
                .windows(2)
                .map(|p| self.integrate(p[0], p[1], &mut f)),
        )
    }
}

pub fn neumaier_sum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Sorted, deduplicated breakpoints restricted to `[lo, hi]`.
pub(crate) fn merge_breaks(mut pts: Vec<f64>, lo: f64, hi: f64) -> Vec<f64> {
    pts.retain(|&p| p > lo && p < hi && p.is_finite());
    pts.push(lo);
    pts.push(hi);
    pts.sort_by(|a, b| a.total_cmp(b));
    let tol = 1e-12 * (hi - lo).abs().max(1e-300);
    pts.dedup_by(|a, b| (*a - *b).abs() <= tol);
    pts
}

/// Points `s·2^j` for `j ≥ -below` that lie below `hi`.
pub(crate) fn geometric_points(s: f64, below: i32, hi: f64) -> Vec<f64> {
    let mut out = Vec::new();
    if !(s > 0.0) {
        return out;
    }
    let mut p = s * 2f64.powi(-below);
    while p < hi {
        out.push(p);
        p *= 2.0;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_on_polynomials() {
        for n in 1..=20 {
            let gl = GaussLegendre::new(n);
            let ws: f64 = gl.weights.iter().sum();
            assert!((ws - 2.0).abs() < 1e-13, "n={n}");
            for deg in 0..2 * n {
                let v = gl.integrate(0.0, 1.0, |x| x.powi(deg as i32));
                assert!(
                    (v - 1.0 / (deg as f64 + 1.0)).abs() < 1e-13,
                    "n={n} deg={deg}"
                );
            }
        }
    }

    #[test]
    fn panels_and_sum() {
        let gl = GaussLegendre::new(10);
        let v = gl.integrate_panels(&[0.0, 1.0, 2.0, std::f64::consts::PI], f64::sin);
        assert!((v - 2.0).abs() < 1e-14);
        assert_eq!(neumaier_sum([1e16, 1.0, -1e16]), 1.0);
    }
}
