//! Number formatting and the parallel/sequential execution switch.

/// Formats a real with 17 significant digits, like C's `%.17g`.
///
/// Seventeen digits always round-trip an `f64` exactly through
/// `str::parse::<f64>`.
pub fn fmt_real(x: f64) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{:.16e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..17).contains(&exp) {
        let decimals = (16 - exp) as usize;
        trim_zeros(format!("{:.*}", decimals, x))
    } else {
        format!("{}e{}{:02}", trim_zeros(mantissa.to_owned()), if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn trim_zeros(mut s: String) -> String {
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    s
}

/// Parses a real written by [`fmt_real`] (or any decimal literal).
pub fn parse_real(s: &str) -> Option<f64> {
    match s.trim() {
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        "nan" => Some(f64::NAN),
        t => t.parse().ok(),
    }
}

/// Order-preserving map over a slice: rayon-backed when the `parallel`
/// feature is on, a plain iterator otherwise. Output order always matches
/// input order, so downstream reductions are bit-stable.
#[cfg(feature = "parallel")]
pub fn par_map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn par_map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    items.iter().map(f).collect()
}

/// Order-preserving map over an index range.
#[cfg(feature = "parallel")]
pub fn par_map_range<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn par_map_range<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    (0..n).map(f).collect()
}

/// Calls `f` with every `k`-subset of `0..n`, as increasing indices.
pub(crate) fn for_each_combination(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Binomial coefficient as a float.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn fmt_real_matches_printf_g17() {
        assert_eq!(fmt_real(2000.0), "2000");
        assert_eq!(fmt_real(0.5), "0.5");
        assert_eq!(fmt_real(2.0 / 3.0), "0.66666666666666663");
        assert_eq!(fmt_real(1e-7), "9.9999999999999995e-08");
        assert_eq!(fmt_real(0.0), "0");
        assert_eq!(fmt_real(-1.25), "-1.25");
    }

    #[test]
    fn combinations_enumerated_in_order() {
        let mut seen = Vec::new();
        for_each_combination(4, 2, |c| seen.push(c.to_vec()));
        assert_eq!(seen, vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]);
        let mut count = 0;
        for_each_combination(3, 0, |c| {
            assert!(c.is_empty());
            count += 1
        });
        assert_eq!(count, 1);
        for_each_combination(2, 3, |_| panic!("no 3-subsets of 2 items"));
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), 10.0);
        assert_eq!(binomial(5, 3), 10.0);
        assert_eq!(binomial(2, 3), 0.0);
        assert_eq!(binomial(0, 0), 1.0);
    }

    proptest! {
        #[test]
        fn fmt_real_round_trips(x in any::<f64>().prop_filter("finite", |v| v.is_finite())) {
            let back = parse_real(&fmt_real(x)).unwrap();
            prop_assert_eq!(back.to_bits(), x.to_bits());
        }

        #[test]
        fn combination_count_is_binomial(n in 0usize..9, k in 0usize..5) {
            let mut count = 0usize;
            for_each_combination(n, k, |_| count += 1);
            prop_assert_eq!(count as f64, binomial(n, k));
        }
    }
}
