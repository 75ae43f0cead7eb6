use std::fs::File;
use std::io::BufReader;

use twophase_core::config::RunConfig;
use twophase_core::equilibria::solve_equilibrium;
use twophase_core::geometry::io::{harmonics_from_json, harmonics_to_json, read_height_csv, write_height_csv};
use twophase_core::geometry::{graph_curvature, GraphPatch, ReferenceSphere};
use twophase_core::spectral::{kernel_analysis, LinearizationParams};
use twophase_core::thermo::latent_heat;

#[test]
fn height_field_survives_both_file_formats() {
    let dir = tempfile::tempdir().unwrap();
    for n in [2, 3] {
        let sph = ReferenceSphere::new(n, vec![0.0; n], 1.3, 6).unwrap();
        let mut h = sph.harmonic(2, if n == 2 { -2 } else { 1 }).unwrap();
        for (v, w) in h.iter_mut().zip(sph.harmonic(3, -3).unwrap()) {
            *v = 0.02 * *v - 0.01 * w;
        }
        let csv_path = dir.path().join(format!("h{n}.csv"));
        write_height_csv(&sph, &h, File::create(&csv_path).unwrap()).unwrap();
        let back = read_height_csv(&sph, BufReader::new(File::open(&csv_path).unwrap())).unwrap();
        assert_eq!(back, h);

        let coeffs = sph.analyze(&h).unwrap();
        let json_path = dir.path().join(format!("h{n}.json"));
        std::fs::write(&json_path, harmonics_to_json(&coeffs, sph.radius).unwrap()).unwrap();
        let (read, radius) = harmonics_from_json(&std::fs::read_to_string(&json_path).unwrap()).unwrap();
        assert_eq!(radius, 1.3);
        let nodal = sph.synthesize(&read).unwrap();
        let err = nodal.iter().zip(&h).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-13, "n={n}: {err:e}");

        // curvature of the read-back field equals that of the original
        let k0 = graph_curvature(&sph, &GraphPatch::new(&sph, h.clone()).unwrap()).unwrap();
        let k1 = graph_curvature(&sph, &GraphPatch::new(&sph, nodal).unwrap()).unwrap();
        assert!(k0.iter().zip(&k1).all(|(a, b)| (a - b).abs() < 1e-11));
    }
}

#[test]
fn config_file_drives_the_equilibrium_and_kernel() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(&path, RunConfig::default().to_toml()).unwrap();
    let cfg = RunConfig::from_toml(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(cfg, RunConfig::default());

    let mat = cfg.material().unwrap();
    let eq = solve_equilibrium(&cfg.conserved(), &mat, cfg.run.gap_fraction).unwrap();
    assert!((eq.radius - cfg.geometry.radius).abs() < 1e-12);
    assert!((eq.theta_star - cfg.geometry.theta_star).abs() < 1e-10);

    // the spectral run at the solved temperature sees the kernel of m identical balls
    let par = LinearizationParams::from_material(&mat, eq.theta_star).unwrap();
    assert!((par.l_star - latent_heat(eq.theta_star, &mat).unwrap()).abs() < 1e-14);
    let geom = cfg.radial_geometry().unwrap();
    for m in [1, 3] {
        let k = kernel_analysis(&geom, &par, m, &cfg.spectrum_options()).unwrap();
        assert_eq!(k.dim, k.expected);
        assert!(k.semisimple && !k.inconclusive);
    }
}
