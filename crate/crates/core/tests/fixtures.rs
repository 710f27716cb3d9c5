use nullcone::cmc::{classify, Verdict};
use nullcone::rigidity::{assemble, DEFAULT_KERNEL_THRESHOLD};
use nullcone::surface::{fit_boosted_sphere, BoostFit, NullConeSurface, LOW_MODE_TOL};
use nullcone::verify::bundled_fixtures;

#[test]
fn twelve_fixtures_three_per_model() {
    let f = bundled_fixtures();
    assert_eq!(f.len(), 12);
    for kind in ["minkowski", "schwarzschild", "desitter", "antidesitter"] {
        assert_eq!(f.iter().filter(|x| x.profile.model.kind == kind).count(), 3, "{kind}");
    }
}

#[test]
fn kernel_dimensions_match_recorded_verdicts() {
    for f in bundled_fixtures() {
        let s = NullConeSurface::from_file(&f.profile).unwrap();
        let k = assemble(&s, 10).unwrap().kernel(DEFAULT_KERNEL_THRESHOLD);
        assert_eq!(k.dimension, f.expected.kernel_dimension, "{}", f.name);
        assert!(k.gap > 1e4, "{}: gap {}", f.name, k.gap);
    }
}

#[test]
fn fits_and_classifications_match() {
    for f in bundled_fixtures() {
        let s = NullConeSurface::from_file(&f.profile).unwrap();
        let fit = fit_boosted_sphere(s.u_coeffs(), LOW_MODE_TOL).unwrap();
        let class = classify(s.u_coeffs(), s.model(), 1e-6).unwrap();
        // the off-centre Schwarzschild profile is ℓ≤1 but not a solution
        let boosted = matches!(class.verdict, Verdict::LowModeBoost { .. });
        assert_eq!(class.rigidity_violation, boosted && !s.model().kind().is_space_form(), "{}", f.name);
        match (fit, f.expected.fit.as_str()) {
            (BoostFit::Boosted { beta, .. }, "boosted") => {
                assert!((beta - f.expected.beta.unwrap()).abs() < 1e-9, "{}", f.name);
                if beta == 0.0 {
                    assert!(matches!(class.verdict, Verdict::SphereOfSymmetry { .. }), "{}", f.name);
                }
            }
            (BoostFit::NotLowMode { distance }, "not_low_mode") => {
                assert!(distance > 1e-3, "{}", f.name);
                assert!(matches!(class.verdict, Verdict::NonRigid { .. }), "{}", f.name);
            }
            (other, e) => panic!("{}: {other:?} vs {e}", f.name),
        }
    }
}

#[test]
fn profile_files_round_trip() {
    for f in bundled_fixtures() {
        let s = NullConeSurface::from_file(&f.profile).unwrap();
        let back = NullConeSurface::from_file(&s.to_file().unwrap()).unwrap();
        assert_eq!(back.u_coeffs(), s.u_coeffs(), "{}", f.name);
        assert_eq!(back.w0(), s.w0());
    }
}
