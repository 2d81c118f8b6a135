/// Gegenbauer polynomial `c_k^lambda(r)` by the three-term recurrence
/// `k c_k = 2 (k + lambda - 1) r c_{k-1} - (k + 2 lambda - 2) c_{k-2}`.
pub fn gegenbauer_raw(lambda: f64, k: usize, r: f64) -> f64 {
    let mut prev = 1.0;
    if k == 0 {
        return prev;
    }
    let mut cur = 2.0 * lambda * r;
    for j in 2..=k {
        let jf = j as f64;
        let next = (2.0 * (jf + lambda - 1.0) * r * cur - (jf + 2.0 * lambda - 2.0) * prev) / jf;
        prev = cur;
        cur = next;
    }
    cur
}

/// Normalized Gegenbauer polynomial on `S^n`: `c_k^{(n-1)/2}(r) / c_k^{(n-1)/2}(1)`.
///
/// For `n = 1` this is the Chebyshev value `cos(k arccos r)`. The argument is
/// clamped into `[-1, 1]`.
pub fn gegenbauer_normalized(n: u32, k: usize, r: f64) -> f64 {
    let r = r.clamp(-1.0, 1.0);
    if n <= 1 {
        return (k as f64 * r.acos()).cos();
    }
    let lambda = (n as f64 - 1.0) / 2.0;
    normalized_recurrence(lambda, k, r, |_, _| {})
}

// P_k = [2 (k + lambda - 1) r P_{k-1} - (k - 1) P_{k-2}] / (k + 2 lambda - 1), P_0 = 1, P_1 = r.
fn normalized_recurrence(lambda: f64, k: usize, r: f64, mut visit: impl FnMut(usize, f64)) -> f64 {
    let mut prev = 1.0;
    visit(0, prev);
    if k == 0 {
        return prev;
    }
    let mut cur = r;
    visit(1, cur);
    for j in 2..=k {
        let jf = j as f64;
        let next = (2.0 * (jf + lambda - 1.0) * r * cur - (jf - 1.0) * prev) / (jf + 2.0 * lambda - 1.0);
        prev = cur;
        cur = next;
        visit(j, cur);
    }
    cur
}

/// Values `C_0^n(r), ..., C_{k_max}^n(r)` in one pass.
#[derive(Debug, Clone, PartialEq)]
pub struct GegenbauerTable {
    values: Vec<f64>,
}

impl GegenbauerTable {
    pub fn new(n: u32, k_max: usize, r: f64) -> Self {
        let r = r.clamp(-1.0, 1.0);
        let mut values = vec![0.0; k_max + 1];
        if n <= 1 {
            let theta = r.acos();
            for (k, v) in values.iter_mut().enumerate() {
                *v = (k as f64 * theta).cos();
            }
        } else {
            let lambda = (n as f64 - 1.0) / 2.0;
            normalized_recurrence(lambda, k_max, r, |k, v| values[k] = v);
        }
        GegenbauerTable { values }
    }

    #[inline]
    pub fn get(&self, k: usize) -> f64 {
        self.values[k]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}
