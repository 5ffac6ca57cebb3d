use std::collections::VecDeque;

use crate::scalar::{dot, lit, Real};

/// Limited-memory inverse Hessian with a fixed diagonal preconditioner.
pub(crate) struct Lbfgs<T> {
    diag: Vec<T>,
    memory: usize,
    pairs: VecDeque<(Vec<T>, Vec<T>, T)>,
}

impl<T: Real> Lbfgs<T> {
    pub fn new(diag: Vec<T>, memory: usize) -> Self {
        Self {
            diag,
            memory,
            pairs: VecDeque::new(),
        }
    }

    pub fn reset(&mut self) {
        self.pairs.clear();
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Stores `(s, y)` when the curvature condition holds; returns whether
    /// the pair was kept.
    pub fn push(&mut self, s: Vec<T>, y: Vec<T>) -> bool {
        let sy = dot(&s, &y);
        let scale = dot(&s, &s).sqrt() * dot(&y, &y).sqrt();
        if !(sy > lit::<T>(1e-12) * scale) {
            return false;
        }
        if self.pairs.len() == self.memory {
            self.pairs.pop_front();
        }
        self.pairs.push_back((s, y, T::one() / sy));
        true
    }

    /// `-H g` by the two-loop recursion.
    pub fn direction(&self, g: &[T]) -> Vec<T> {
        let mut q = g.to_vec();
        let mut alpha = Vec::with_capacity(self.pairs.len());
        for (s, y, rho) in self.pairs.iter().rev() {
            let a = *rho * dot(s, &q);
            q.iter_mut().zip(y).for_each(|(qi, &yi)| *qi -= a * yi);
            alpha.push(a);
        }
        let gamma = match self.pairs.back() {
            Some((s, y, _)) => {
                let ydy = y
                    .iter()
                    .zip(&self.diag)
                    .fold(T::zero(), |acc, (&v, &d)| acc + v * v * d);
                dot(s, y) / ydy
            }
            None => T::one(),
        };
        let mut r: Vec<T> = q.iter().zip(&self.diag).map(|(&v, &d)| gamma * d * v).collect();
        for ((s, y, rho), a) in self.pairs.iter().zip(alpha.into_iter().rev()) {
            let b = *rho * dot(y, &r);
            r.iter_mut().zip(s).for_each(|(ri, &si)| *ri += (a - b) * si);
        }
        r.iter_mut().for_each(|v| *v = -*v);
        r
    }
}
