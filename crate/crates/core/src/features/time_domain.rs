/// Per-channel statistics appended in this order.
pub const CHANNEL_STATS: [&str; 4] = ["mean", "std", "zero_crossings", "energy"];

fn mean_std(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn is_constant(mean: f64, std: f64) -> bool {
    std <= 1e-12 * mean.abs().max(1.0)
}

/// Sign changes between consecutive samples; exact zeros keep the previous sign.
pub fn zero_crossings(x: &[f64]) -> usize {
    let mut prev: Option<bool> = None;
    let mut count = 0;
    for &v in x {
        if v == 0.0 {
            continue;
        }
        let positive = v > 0.0;
        if prev.is_some_and(|p| p != positive) {
            count += 1;
        }
        prev = Some(positive);
    }
    count
}

/// Pearson correlation, 0 when either input is constant.
pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let (ma, sa) = mean_std(a);
    let (mb, sb) = mean_std(b);
    if is_constant(ma, sa) || is_constant(mb, sb) {
        return 0.0;
    }
    let cov = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - ma) * (y - mb))
        .sum::<f64>()
        / a.len() as f64;
    (cov / (sa * sb)).clamp(-1.0, 1.0)
}

/// Mean, population std, zero-crossing count and energy for every channel,
/// followed by the correlation of every channel pair `(i, j)`, `i < j`.
pub fn time_domain_features(channels: &[&[f64]]) -> Vec<f64> {
    let c = channels.len();
    let mut out = Vec::with_capacity(4 * c + c * (c.saturating_sub(1)) / 2);
    for ch in channels {
        let (mean, std) = mean_std(ch);
        out.push(mean);
        out.push(std);
        out.push(zero_crossings(ch) as f64);
        out.push(ch.iter().map(|v| v * v).sum());
    }
    for i in 0..c {
        for j in i + 1..c {
            out.push(correlation(channels[i], channels[j]));
        }
    }
    out
}

pub fn time_domain_names(c: usize) -> Vec<String> {
    let mut names: Vec<String> = (0..c)
        .flat_map(|ch| CHANNEL_STATS.iter().map(move |s| format!("ch{ch}_{s}")))
        .collect();
    for i in 0..c {
        for j in i + 1..c {
            names.push(format!("corr_ch{i}_ch{j}"));
        }
    }
    names
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_channel() {
        let x = [2.0; 90];
        assert_eq!(time_domain_features(&[&x]), vec![2.0, 0.0, 0.0, 360.0]);
    }

    #[test]
    fn alternating_channel() {
        let x = [1.0, -1.0, 1.0, -1.0];
        let f = time_domain_features(&[&x]);
        assert_eq!(f[0], 0.0);
        assert_eq!(f[2], 3.0);
    }

    #[test]
    fn zeros_carry_previous_sign() {
        assert_eq!(zero_crossings(&[1.0, 0.0, 0.0, 2.0]), 0);
        assert_eq!(zero_crossings(&[1.0, 0.0, -2.0, 0.0, 3.0]), 2);
        assert_eq!(zero_crossings(&[0.0, 0.0]), 0);
    }

    #[test]
    fn correlation_conventions() {
        let a: Vec<f64> = (0..20).map(|i| (i as f64 * 0.4).sin()).collect();
        let f = time_domain_features(&[&a, &a]);
        assert!((f[8] - 1.0).abs() < 1e-12);
        let neg: Vec<f64> = a.iter().map(|v| -3.0 * v + 1.0).collect();
        assert!((correlation(&a, &neg) + 1.0).abs() < 1e-12);
        assert_eq!(correlation(&a, &[4.0; 20]), 0.0);
    }

    #[test]
    fn names_match_layout() {
        assert_eq!(time_domain_names(9).len(), 36 + 36);
        assert_eq!(time_domain_names(2)[8], "corr_ch0_ch1");
    }
}
