use crate::error::{Error, Result};

/// Root mean square deviation `sqrt(mean((ŝ − s)²))`.
pub fn rmsd_loss(targets: &[f64], predictions: &[f64]) -> Result<f64> {
    check(targets, predictions)?;
    Ok(mean_square(targets, predictions).sqrt())
}

/// RMSD and its gradient w.r.t. the predictions, `(ŝ − s) / (N · RMSD)`.
/// At RMSD = 0 the gradient is defined as zero.
pub fn rmsd_with_grad(targets: &[f64], predictions: &[f64]) -> Result<(f64, Vec<f64>)> {
    check(targets, predictions)?;
    let loss = mean_square(targets, predictions).sqrt();
    let n = targets.len() as f64;
    let grad = if loss == 0.0 {
        vec![0.0; targets.len()]
    } else {
        let scale = 1.0 / (n * loss);
        predictions.iter().zip(targets).map(|(p, t)| (p - t) * scale).collect()
    };
    Ok((loss, grad))
}

fn check(targets: &[f64], predictions: &[f64]) -> Result<()> {
    if targets.is_empty() {
        return Err(Error::Empty("RMSD targets"));
    }
    if targets.len() != predictions.len() {
        return Err(Error::dims("RMSD predictions", targets.len(), predictions.len()));
    }
    Ok(())
}

fn mean_square(targets: &[f64], predictions: &[f64]) -> f64 {
    let ss: f64 = targets.iter().zip(predictions).map(|(t, p)| (p - t) * (p - t)).sum();
    ss / targets.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(rmsd_loss(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert!((rmsd_loss(&[0.0, 0.0], &[3.0, 4.0]).unwrap() - 3.535534).abs() < 1e-6);
        assert_eq!(rmsd_loss(&[1.0], &[0.0]).unwrap(), 1.0);
    }

    #[test]
    fn errors() {
        assert!(matches!(rmsd_loss(&[], &[]), Err(Error::Empty(_))));
        assert!(rmsd_loss(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn zero_loss_zero_gradient() {
        let (l, g) = rmsd_with_grad(&[0.5, -1.0], &[0.5, -1.0]).unwrap();
        assert_eq!(l, 0.0);
        assert_eq!(g, vec![0.0, 0.0]);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let s = [0.3, -1.2, 2.0, 0.7];
        let p = [0.1, -0.2, 1.5, 1.9];
        let (_, g) = rmsd_with_grad(&s, &p).unwrap();
        let h = 1e-6;
        for k in 0..p.len() {
            let mut up = p;
            let mut dn = p;
            up[k] += h;
            dn[k] -= h;
            let fd = (rmsd_loss(&s, &up).unwrap() - rmsd_loss(&s, &dn).unwrap()) / (2.0 * h);
            assert!((fd - g[k]).abs() <= 1e-8 * g[k].abs().max(1e-3), "{fd} vs {}", g[k]);
        }
    }
}
