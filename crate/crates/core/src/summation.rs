//! Compensated (Neumaier) accumulators.

/// Running sum with Neumaier compensation.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = Self::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// Compensated sum of an iterator.
pub fn sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<CompensatedSum>().value()
}

/// Component-wise compensated accumulator for a vector of fixed length.
#[derive(Debug, Clone, PartialEq)]
pub struct CompensatedVec {
    parts: Vec<CompensatedSum>,
}

impl CompensatedVec {
    pub fn zeros(dim: usize) -> Self {
        Self {
            parts: vec![CompensatedSum::new(); dim],
        }
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    /// Adds `scale * x` component-wise.
    pub fn add_scaled(&mut self, x: &[f64], scale: f64) {
        debug_assert_eq!(x.len(), self.parts.len());
        for (p, &xi) in self.parts.iter_mut().zip(x) {
            p.add(scale * xi);
        }
    }

    pub fn values(&self) -> Vec<f64> {
        self.parts.iter().map(CompensatedSum::value).collect()
    }

    /// Writes `values() / denom` into `out`.
    pub fn write_scaled(&self, denom: f64, out: &mut [f64]) {
        for (o, p) in out.iter_mut().zip(&self.parts) {
            *o = p.value() / denom;
        }
    }
}
