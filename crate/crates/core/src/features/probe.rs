//! Logistic-regression probe used to compare feature sets.

use super::{FeatureError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeOptions {
    pub learning_rate: f64,
    pub max_iter: usize,
    /// Stop once the largest gradient component falls below this.
    pub tolerance: f64,
    pub l2: f64,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        Self {
            learning_rate: 0.5,
            max_iter: 5000,
            tolerance: 1e-6,
            l2: 1e-4,
        }
    }
}

/// Logistic regression on standardised inputs, fit by full-batch gradient descent.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProbe {
    pub weights: Vec<f64>,
    pub bias: f64,
    mean: Vec<f64>,
    scale: Vec<f64>,
    pub iterations: usize,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl LinearProbe {
    pub fn fit(features: &[Vec<f64>], labels: &[bool], options: ProbeOptions) -> Result<Self> {
        let n = features.len();
        if n != labels.len() {
            return Err(FeatureError::DimensionMismatch(format!(
                "{n} feature rows vs {} labels",
                labels.len()
            )));
        }
        let positives = labels.iter().filter(|&&l| l).count();
        if n < 2 || positives == 0 || positives == n {
            return Err(FeatureError::NeedBothClasses);
        }
        let d = features[0].len();
        if features.iter().any(|f| f.len() != d) {
            return Err(FeatureError::DimensionMismatch(
                "ragged feature rows".into(),
            ));
        }
        if features.iter().flatten().any(|x| !x.is_finite()) {
            return Err(FeatureError::NonFinite);
        }

        let mut mean = vec![0.0; d];
        for f in features {
            mean.iter_mut().zip(f).for_each(|(m, x)| *m += x / n as f64);
        }
        let mut scale = vec![0.0; d];
        for f in features {
            for j in 0..d {
                scale[j] += (f[j] - mean[j]).powi(2) / n as f64;
            }
        }
        scale
            .iter_mut()
            .for_each(|s| *s = if *s > 1e-24 { s.sqrt() } else { 1.0 });
        let xs: Vec<Vec<f64>> = features
            .iter()
            .map(|f| (0..d).map(|j| (f[j] - mean[j]) / scale[j]).collect())
            .collect();
        let ys: Vec<f64> = labels.iter().map(|&l| f64::from(u8::from(l))).collect();

        let mut w = vec![0.0; d];
        let mut b = 0.0;
        let mut gw = vec![0.0; d];
        let mut iterations = 0;
        for it in 0..options.max_iter {
            iterations = it + 1;
            gw.iter_mut()
                .zip(&w)
                .for_each(|(g, wj)| *g = options.l2 * wj);
            let mut gb = 0.0;
            for (x, y) in xs.iter().zip(&ys) {
                let z = b + x.iter().zip(&w).map(|(a, c)| a * c).sum::<f64>();
                let r = (sigmoid(z) - y) / n as f64;
                gb += r;
                gw.iter_mut().zip(x).for_each(|(g, xj)| *g += r * xj);
            }
            let max_g = gw.iter().fold(gb.abs(), |m, g| m.max(g.abs()));
            if max_g < options.tolerance {
                break;
            }
            w.iter_mut()
                .zip(&gw)
                .for_each(|(wj, g)| *wj -= options.learning_rate * g);
            b -= options.learning_rate * gb;
        }
        Ok(Self {
            weights: w,
            bias: b,
            mean,
            scale,
            iterations,
        })
    }

    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        let z = self.bias
            + x.iter()
                .zip(&self.mean)
                .zip(&self.scale)
                .zip(&self.weights)
                .map(|(((xi, m), s), w)| (xi - m) / s * w)
                .sum::<f64>();
        sigmoid(z)
    }

    pub fn predict_all(&self, xs: &[Vec<f64>]) -> Vec<f64> {
        xs.iter().map(|x| self.predict_proba(x)).collect()
    }
}
