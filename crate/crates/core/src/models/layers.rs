use pretext_forge_autograd::{Init, ParamId, ParamStore, Scalar, Tape, Var};

use crate::error::Result;

/// Square-kernel convolution.
#[derive(Clone, Debug)]
pub struct Conv {
    pub w: ParamId,
    pub b: ParamId,
    pub stride: usize,
    pub pad: usize,
}

impl Conv {
    pub fn new<T: Scalar>(
        store: &mut ParamStore<T>,
        name: &str,
        in_c: usize,
        out_c: usize,
        k: usize,
        stride: usize,
    ) -> Self {
        let fan_in = in_c * k * k;
        Self {
            w: store.alloc(
                &format!("{name}.weight"),
                &[out_c, in_c, k, k],
                Init::HeUniform { fan_in },
            ),
            b: store.alloc(&format!("{name}.bias"), &[out_c], Init::Zeros),
            stride,
            pad: k / 2,
        }
    }

    pub fn forward<T: Scalar>(&self, t: &mut Tape<T>, s: &ParamStore<T>, x: Var) -> Result<Var> {
        let w = t.param(s, self.w);
        let b = t.param(s, self.b);
        Ok(t.conv2d(x, w, b, self.stride, self.pad)?)
    }
}

#[derive(Clone, Debug)]
pub struct Dense {
    pub w: ParamId,
    pub b: ParamId,
}

impl Dense {
    pub fn new<T: Scalar>(
        store: &mut ParamStore<T>,
        name: &str,
        in_n: usize,
        out_n: usize,
    ) -> Self {
        Self {
            w: store.alloc(
                &format!("{name}.weight"),
                &[out_n, in_n],
                Init::LecunUniform { fan_in: in_n },
            ),
            b: store.alloc(&format!("{name}.bias"), &[out_n], Init::Zeros),
        }
    }

    pub fn forward<T: Scalar>(&self, t: &mut Tape<T>, s: &ParamStore<T>, x: Var) -> Result<Var> {
        let w = t.param(s, self.w);
        let b = t.param(s, self.b);
        Ok(t.linear(x, w, b)?)
    }
}

/// Two 3x3 convolutions with an identity shortcut.
#[derive(Clone, Debug)]
pub struct ResBlock {
    c1: Conv,
    c2: Conv,
    leak: Option<f64>,
}

impl ResBlock {
    pub fn new<T: Scalar>(store: &mut ParamStore<T>, name: &str, c: usize) -> Self {
        Self {
            c1: Conv::new(store, &format!("{name}.conv1"), c, c, 3, 1),
            c2: Conv::new(store, &format!("{name}.conv2"), c, c, 3, 1),
            leak: None,
        }
    }

    pub fn leaky(mut self, slope: f64) -> Self {
        self.leak = Some(slope);
        self
    }

    fn act<T: Scalar>(&self, t: &mut Tape<T>, x: Var) -> Var {
        match self.leak {
            Some(k) => t.leaky_relu(x, T::lit(k)),
            None => t.relu(x),
        }
    }

    pub fn forward<T: Scalar>(&self, t: &mut Tape<T>, s: &ParamStore<T>, x: Var) -> Result<Var> {
        let h = self.c1.forward(t, s, x)?;
        let h = self.act(t, h);
        let h = self.c2.forward(t, s, h)?;
        let sum = t.add(h, x)?;
        Ok(self.act(t, sum))
    }
}
