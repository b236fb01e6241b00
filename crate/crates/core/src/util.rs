//! Small numeric helpers shared across modules.

/// Binomial coefficient C(k, n) as f64, exact for the small orders used here.
pub fn binomial(k: u32, n: u32) -> f64 {
    if n > k {
        return 0.0;
    }
    let n = n.min(k - n);
    let mut acc: u128 = 1;
    for i in 0..n {
        acc = acc * (k - i) as u128 / (i + 1) as u128;
    }
    acc as f64
}

#[cfg(test)]
mod tests {
    use super::binomial;

    #[test]
    fn binomial_small_table() {
        assert_eq!(binomial(0, 0), 1.0);
        assert_eq!(binomial(5, 0), 1.0);
        assert_eq!(binomial(5, 2), 10.0);
        assert_eq!(binomial(6, 3), 20.0);
        assert_eq!(binomial(6, 7), 0.0);
        assert_eq!(binomial(20, 10), 184756.0);
    }
}
