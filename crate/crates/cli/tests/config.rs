use dicke_niba_cli::config::{RunConfig, DEFAULT_OMEGA_C};
use dicke_niba_cli::CliError;

#[test]
fn defaults_fill_eps0_and_cutoff() {
    let p = RunConfig::parse("N = 4\nalpha = 0.2\nT_S = 4\nT_D = 2\n").unwrap().params().unwrap();
    assert_eq!(p.system.n, 4);
    assert_eq!(p.system.eps0, 0.0);
    assert_eq!(p.source.omega_c, DEFAULT_OMEGA_C);
    assert_eq!(p.drain.omega_c, DEFAULT_OMEGA_C);
    assert_eq!((p.source.alpha, p.drain.alpha), (0.2, 0.2));
}

#[test]
fn per_bath_keys_are_honoured() {
    let text = "N = 2\nalpha_S = 0.1\nalpha_D = 0.3\nomega_c_S = 5\nomega_c_D = 20\nT_S = 4\nT_D = 2\n";
    let p = RunConfig::parse(text).unwrap().params().unwrap();
    assert_eq!((p.source.alpha, p.drain.alpha), (0.1, 0.3));
    assert_eq!((p.source.omega_c, p.drain.omega_c), (5.0, 20.0));
    assert_eq!((p.source.temperature, p.drain.temperature), (4.0, 2.0));
}

#[test]
fn missing_keys_are_named() {
    let cases = [
        ("alpha = 0.1\nT_S = 4\nT_D = 2\n", "N"),
        ("N = 2\nT_S = 4\nT_D = 2\n", "alpha"),
        ("N = 2\nalpha = 0.1\nT_D = 2\n", "T_S"),
        ("N = 2\nalpha = 0.1\nT_S = 4\n", "T_D"),
        ("N = 2\nalpha = 0.1\nomega_c_D = 3\nT_S = 4\nT_D = 2\n", "omega_c_S"),
    ];
    for (text, key) in cases {
        match RunConfig::parse(text).unwrap().params() {
            Err(e @ CliError::MissingKey(k)) => {
                assert_eq!(k, key);
                assert_eq!(e.exit_code(), 2);
            }
            other => panic!("{key}: {other:?}"),
        }
    }
}

#[test]
fn sweep_sizes_fall_back_to_single_n() {
    let cfg = RunConfig::parse("N = 5\nT_S = 4\nT_D = 2\n").unwrap();
    assert_eq!(cfg.sizes().unwrap(), [5]);
    let cfg = RunConfig::parse("N = 5\nN_list = [2, 3]\nT_S = 4\nT_D = 2\n").unwrap();
    assert_eq!(cfg.sizes().unwrap(), [2, 3]);
    let cfg = RunConfig::parse("T_S = 4\nT_D = 2\n").unwrap();
    assert!(matches!(cfg.sizes(), Err(CliError::MissingKey("N_list"))));
    let cfg = RunConfig::parse("N_list = []\nT_S = 4\nT_D = 2\n").unwrap();
    assert_eq!(cfg.sizes().unwrap_err().exit_code(), 2);
}

#[test]
fn template_ignores_configured_coupling() {
    let cfg = RunConfig::parse("N_list = [3]\nalpha = 0.7\nalpha_min = 0.02\nT_S = 4\nT_D = 2\n").unwrap();
    let t = cfg.template().unwrap();
    assert_eq!(t.system.n, 3);
    assert_eq!(t.source.alpha, 0.02);
}

#[test]
fn solver_keys_reach_options() {
    let cfg = RunConfig::parse("fd_step = 1e-4\ntolerance = 1e-8\nalpha_points = 12\nalpha_max = 2\n").unwrap();
    let fd = cfg.fd_options();
    assert_eq!(fd.step, Some(1e-4));
    assert_eq!(fd.tolerance, 1e-8);
    let opt = cfg.opt_options();
    assert_eq!((opt.points, opt.alpha_max), (12, 2.0));
}

#[test]
fn model_errors_map_to_exit_codes() {
    let invalid = CliError::from(dicke_niba::Error::Domain("empty grid".into()));
    assert_eq!(invalid.exit_code(), 2);
    let numerical = CliError::from(dicke_niba::Error::Numerical("singular".into()));
    assert_eq!(numerical.exit_code(), 1);
}
