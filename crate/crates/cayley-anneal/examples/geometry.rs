//! Realize the three Cayley-tree arrays (G10 planar, G22 rotated-3D, G14
//! dual-center), check their spacing rules, and print the layouts.
//!
//!     cargo run --example geometry

use cayley_anneal::config::ExperimentConfig;
use cayley_anneal::lattice::validate_geometry;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for preset in [1usize, 2, 3] {
        let cfg = ExperimentConfig::preset(preset)?;
        let consts = cfg.physical_constants();
        let (g, geo) = cfg.build_graph()?;
        let report = validate_geometry(&g, &geo);

        println!("preset {preset}: {}", g.signature());
        println!("  atoms {}, edges {}", g.n_vertices(), g.n_edges());
        println!(
            "  d = {:.3} um = {:.3} r_b  (r_b = {:.3} um)",
            geo.d(),
            geo.d() / consts.blockade_radius(),
            consts.blockade_radius()
        );
        println!(
            "  edge deviation {:.2e}, min non-edge distance {:.4} d (rule: >= sqrt(3) = {:.4})",
            report.edge_dev_max,
            report.min_nonedge_ratio,
            3f64.sqrt()
        );
        println!(
            "  worst parasitic coupling {:.5} U (rule: <= 1/27 = {:.5})",
            report.max_nonedge_coupling_ratio,
            1.0 / 27.0
        );
        let planar = geo.positions().iter().all(|p| p[2] == 0.0);
        println!("  layout: {}", if planar { "planar (z = 0)" } else { "three-dimensional" });
        println!();
    }
    Ok(())
}
