use super::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activation {
    Relu,
    Sigmoid,
    Tanh,
    /// Row-wise; only valid on an output layer.
    Softmax,
    Linear,
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl Activation {
    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Sigmoid => "sigmoid",
            Activation::Tanh => "tanh",
            Activation::Softmax => "softmax",
            Activation::Linear => "linear",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "relu" => Activation::Relu,
            "sigmoid" => Activation::Sigmoid,
            "tanh" => Activation::Tanh,
            "softmax" => Activation::Softmax,
            "linear" => Activation::Linear,
            _ => return None,
        })
    }

    pub fn apply(self, z: &Matrix) -> Matrix {
        match self {
            Activation::Relu => z.mapv(|v| v.max(0.0)),
            Activation::Sigmoid => z.mapv(sigmoid),
            Activation::Tanh => z.mapv(f64::tanh),
            Activation::Linear => z.clone(),
            Activation::Softmax => {
                let mut out = z.clone();
                for mut row in out.rows_mut() {
                    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    row.mapv_inplace(|v| (v - max).exp());
                    let sum = row.sum();
                    row.mapv_inplace(|v| v / sum);
                }
                out
            }
        }
    }

    /// Gradient with respect to the pre-activation `z`, given the activation
    /// output `a` and the upstream gradient `grad`.
    pub fn backward(self, z: &Matrix, a: &Matrix, grad: &Matrix) -> Matrix {
        match self {
            Activation::Relu => {
                let mut g = grad.clone();
                g.zip_mut_with(z, |g, &z| {
                    if z <= 0.0 {
                        *g = 0.0
                    }
                });
                g
            }
            Activation::Sigmoid => {
                let mut g = grad.clone();
                g.zip_mut_with(a, |g, &a| *g *= a * (1.0 - a));
                g
            }
            Activation::Tanh => {
                let mut g = grad.clone();
                g.zip_mut_with(a, |g, &a| *g *= 1.0 - a * a);
                g
            }
            Activation::Linear => grad.clone(),
            Activation::Softmax => {
                let mut g = grad.clone();
                for (mut grow, arow) in g.rows_mut().into_iter().zip(a.rows()) {
                    let dot: f64 = grow.iter().zip(arow.iter()).map(|(g, a)| g * a).sum();
                    grow.zip_mut_with(&arow, |g, &a| *g = a * (*g - dot));
                }
                g
            }
        }
    }
}
