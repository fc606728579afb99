/// Neumaier's compensated summation. Order-insensitive to roughly one ulp
/// of the result rather than `n` ulps.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Coordinate-wise compensated sum of equal-length vectors.
#[derive(Clone, Debug)]
pub struct CompensatedVecSum {
    parts: Vec<CompensatedSum>,
}

impl CompensatedVecSum {
    pub fn new(dim: usize) -> Self {
        CompensatedVecSum {
            parts: vec![CompensatedSum::new(); dim],
        }
    }

    pub fn add(&mut self, x: &[f64]) {
        debug_assert_eq!(x.len(), self.parts.len());
        for (p, &v) in self.parts.iter_mut().zip(x) {
            p.add(v);
        }
    }

    pub fn value(&self) -> Vec<f64> {
        self.parts.iter().map(CompensatedSum::value).collect()
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    let mut s = CompensatedSum::new();
    for x in it {
        s.add(x);
    }
    s.value()
}
