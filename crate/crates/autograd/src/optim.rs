use std::collections::BTreeMap;

use crate::params::{Gradients, ParamId, ParamStore};
use crate::scalar::Scalar;

/// Applies gradients to parameters. Parameters without a gradient are left
/// untouched.
pub trait Optimizer<T: Scalar> {
    fn step(&mut self, store: &mut ParamStore<T>, grads: &Gradients<T>);
}

#[derive(Clone, Debug)]
pub struct Sgd<T> {
    pub lr: T,
}

impl<T: Scalar> Optimizer<T> for Sgd<T> {
    fn step(&mut self, store: &mut ParamStore<T>, grads: &Gradients<T>) {
        for (id, g) in grads.iter() {
            for (p, &gi) in store.get_mut(id).data_mut().iter_mut().zip(g.data()) {
                *p = *p - self.lr * gi;
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct Adam<T> {
    pub lr: T,
    pub beta1: T,
    pub beta2: T,
    pub eps: T,
    moments: BTreeMap<ParamId, (Vec<T>, Vec<T>, u32)>,
}

impl<T: Scalar> Adam<T> {
    pub fn new(lr: T) -> Self {
        Self {
            lr,
            beta1: T::lit(0.9),
            beta2: T::lit(0.999),
            eps: T::lit(1e-8),
            moments: BTreeMap::new(),
        }
    }
}

impl<T: Scalar> Optimizer<T> for Adam<T> {
    fn step(&mut self, store: &mut ParamStore<T>, grads: &Gradients<T>) {
        for (id, g) in grads.iter() {
            let n = g.len();
            let (m, v, t) = self
                .moments
                .entry(id)
                .or_insert_with(|| (vec![T::zero(); n], vec![T::zero(); n], 0));
            *t += 1;
            let bc1 = T::one() - self.beta1.powi(*t as i32);
            let bc2 = T::one() - self.beta2.powi(*t as i32);
            let p = store.get_mut(id).data_mut();
            for i in 0..n {
                let gi = g.data()[i];
                m[i] = self.beta1 * m[i] + (T::one() - self.beta1) * gi;
                v[i] = self.beta2 * v[i] + (T::one() - self.beta2) * gi * gi;
                let mh = m[i] / bc1;
                let vh = v[i] / bc2;
                p[i] = p[i] - self.lr * mh / (vh.sqrt() + self.eps);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Init;
    use crate::tape::Tape;
    use crate::tensor::Tensor;

    fn quadratic_descends(opt: &mut dyn Optimizer<f64>) -> (f64, f64) {
        let mut store = ParamStore::new(1);
        let w = store.alloc("w", &[3], Init::Uniform { bound: 2.0 });
        let target = Tensor::from_vec(&[3], vec![0.5, -1.0, 0.25]).unwrap();
        let loss = |store: &ParamStore<f64>| {
            let mut t = Tape::new();
            let wv = t.param(store, w);
            let tv = t.input(target.clone());
            let d = t.sub(wv, tv).unwrap();
            let sq = t.mul(d, d).unwrap();
            let l = t.mean(sq);
            (t, l)
        };
        let (t0, l0) = loss(&store);
        let first = t0.item(l0);
        for _ in 0..200 {
            let (t, l) = loss(&store);
            let g = t.backward(l);
            opt.step(&mut store, &g);
        }
        let (t1, l1) = loss(&store);
        (first, t1.item(l1))
    }

    #[test]
    fn sgd_and_adam_minimize_a_quadratic() {
        let (a, b) = quadratic_descends(&mut Sgd { lr: 0.5 });
        assert!(b < a * 1e-6);
        let (a, b) = quadratic_descends(&mut Adam::new(0.05));
        assert!(b < a * 1e-2);
    }
}
