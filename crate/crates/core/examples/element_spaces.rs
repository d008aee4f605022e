//! Structured meshes, the four element families and their degree-of-freedom
//! counts, and the commuting-diagram defect of the canonical interpolants.
use std::sync::Arc;

use cosserat_mfe::assembly::{DiscreteProblem, Method, SpaceLayout};
use cosserat_mfe::cosserat_core::MaterialModel;
use cosserat_mfe::fe_spaces::ElementKind;
use cosserat_mfe::mesh::Mesh;
use cosserat_mfe::properties::commuting_defect;

fn main() {
    for dim in [2, 3] {
        let n = if dim == 2 { 8 } else { 2 };
        let mesh = Arc::new(Mesh::structured(dim, n).expect("valid mesh"));
        println!(
            "{dim}D n={n}: {} vertices, {} facets, {} cells, h = {:.3}",
            mesh.num_vertices(),
            mesh.num_facets(),
            mesh.num_cells(),
            mesh.h()
        );
        for k in 0..2 {
            for m in Method::ALL {
                let layout = SpaceLayout::for_method(m, k);
                let p = DiscreteProblem::new(mesh.clone(), m, k, MaterialModel::default()).expect("valid spaces");
                println!(
                    "  k={k} {m:7} sigma {:6} omega {:6} u {:6} r {:6}  n_p = {:6}, n_u = {:6}",
                    layout.sigma.name(),
                    layout.omega.name(),
                    layout.u.name(),
                    layout.r.name(),
                    p.n_p(),
                    p.n_u()
                );
            }
        }
    }
    for kind in [ElementKind::rt(0), ElementKind::bdm(1), ElementKind::rt(1), ElementKind::bdm(2)] {
        println!("commuting defect of {}: 2D {:.1e}, 3D {:.1e}", kind.name(), commuting_defect(2, 2, kind, 1), commuting_defect(3, 1, kind, 1));
    }
}
