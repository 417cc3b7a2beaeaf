/// Gauss–Legendre rule on `[0, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { x } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[n - 1 - i] = 0.5 * (x + 1.0);
        weights[n - 1 - i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Composite rule with `panels` equal panels of `order` nodes each.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadrature {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Quadrature {
    pub fn composite(order: usize, panels: usize) -> Self {
        let (x, w) = gauss_legendre(order);
        let h = 1.0 / panels as f64;
        let mut nodes = Vec::with_capacity(order * panels);
        let mut weights = Vec::with_capacity(order * panels);
        for p in 0..panels {
            for (xi, wi) in x.iter().zip(&w) {
                nodes.push((p as f64 + xi) * h);
                weights.push(wi * h);
            }
        }
        Self { nodes, weights }
    }
}

impl Default for Quadrature {
    fn default() -> Self {
        Self::composite(8, 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_exactly() {
        let q = Quadrature::composite(8, 1);
        for deg in 0..16 {
            let s: f64 = q
                .nodes
                .iter()
                .zip(&q.weights)
                .map(|(x, w)| w * x.powi(deg))
                .sum();
            assert!((s - 1.0 / (deg + 1) as f64).abs() < 1e-14, "degree {deg}");
        }
    }

    #[test]
    fn symmetric_nodes() {
        let (x, w) = gauss_legendre(5);
        for i in 0..5 {
            assert!((x[i] + x[4 - i] - 1.0).abs() < 1e-15);
            assert!((w[i] - w[4 - i]).abs() < 1e-15);
        }
        let q = Quadrature::composite(3, 4);
        assert!((q.weights.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }
}
