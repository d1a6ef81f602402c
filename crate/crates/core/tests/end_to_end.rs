use sbpmt_core::bounds::{design_stats, estimate_p_sub};
use sbpmt_core::ensemble::{fit_sbpmt, predict_sbpmt, SbpmtConfig};
use sbpmt_core::Dataset;

/// Three classes in the plane separated by the sign pattern of two lines.
fn three_class(n: usize) -> Dataset {
    let mut x = Vec::with_capacity(2 * n);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let a = ((i * 37) % 101) as f64 / 50.0 - 1.0;
        let b = ((i * 59) % 103) as f64 / 51.0 - 1.0;
        x.extend([a, b]);
        y.push(if a < -0.3 {
            0
        } else if b < 0.2 {
            1
        } else {
            2
        });
    }
    Dataset::new(x, 2, y, 3).unwrap()
}

#[test]
fn fits_and_separates_three_classes() {
    let data = three_class(300);
    let config = SbpmtConfig {
        members: 7,
        ..SbpmtConfig::benchmark()
    };
    let fit = fit_sbpmt(&data, &config).unwrap();
    assert_eq!(fit.member_fits.len(), 7);
    let correct = (0..data.n_rows())
        .filter(|&i| predict_sbpmt(&fit.model, data.row(i)).unwrap() == data.label(i))
        .count();
    assert!(correct as f64 / data.n_rows() as f64 > 0.95, "{correct}");

    let stats = design_stats(&fit.model.design).unwrap();
    assert_eq!(stats.coverage.iter().sum::<usize>(), 7 * fit.model.design.m);
    let p = estimate_p_sub(&fit.model, &data).unwrap();
    assert!(!p.fallback && p.value < 0.2, "{}", p.value);
}

#[test]
fn rejects_wrong_width_input() {
    let data = three_class(60);
    let fit = fit_sbpmt(&data, &SbpmtConfig::benchmark()).unwrap();
    assert!(predict_sbpmt(&fit.model, &[0.0]).is_err());
}
