//! Browser bindings for a handful of basis and kernel computations.
use dunkl_hermite::hermite::HermiteBasis;
use dunkl_hermite::kernels::{KernelConfig, Kernels};
use dunkl_hermite::reflection::{MultiplicityValues, RootSystem, RootSystemConfig};
use dunkl_hermite::spectral::{operator_norm, riesz_matrix};
use wasm_bindgen::prelude::*;

fn fail(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

fn root_system(group: &str, kappa: &[f64]) -> Result<RootSystem, JsError> {
    let multiplicity = match kappa {
        [k] => MultiplicityValues::Uniform(*k),
        ks => MultiplicityValues::List(ks.to_vec()),
    };
    RootSystemConfig::Catalogue { name: group.into(), multiplicity }.build().map_err(fail)
}

/// Values of the first `degree + 1` rank-one Hermite functions on `xs`,
/// one row per function.
#[wasm_bindgen]
pub fn hermite_functions(kappa: f64, degree: u32, xs: &[f64]) -> Result<Vec<f64>, JsError> {
    let basis = HermiteBasis::build(&root_system("z2", &[kappa])?, degree).map_err(fail)?;
    let columns = xs.iter().map(|&x| basis.hermite_functions_at(&[x])).collect::<Result<Vec<_>, _>>().map_err(fail)?;
    Ok((0..basis.len()).flat_map(|n| columns.iter().map(move |c| c[n])).collect())
}

/// The rank-one heat kernel `x ↦ k_t(x, y)` on `xs`: the closed form
/// followed by the eigenfunction series truncated at `degree`.
#[wasm_bindgen]
pub fn heat_curve(kappa: f64, t: f64, y: f64, degree: u32, xs: &[f64]) -> Result<Vec<f64>, JsError> {
    let basis = HermiteBasis::build(&root_system("z2", &[kappa])?, degree).map_err(fail)?;
    let kernels = Kernels::new(&basis, KernelConfig::default()).map_err(fail)?;
    let closed = xs.iter().map(|&x| kernels.heat(t, &[x], &[y]));
    let series = xs.iter().map(|&x| kernels.heat_spectral(t, &[x], &[y]));
    closed.chain(series).collect::<Result<_, _>>().map_err(fail)
}

/// Operator norms of the Riesz transforms on the span of the basis, one per
/// axis.
#[wasm_bindgen]
pub fn riesz_norms(group: &str, kappa: &[f64], degree: u32) -> Result<Vec<f64>, JsError> {
    let basis = HermiteBasis::build(&root_system(group, kappa)?, degree).map_err(fail)?;
    (0..basis.dim())
        .map(|j| riesz_matrix(&basis, j).map(|m| operator_norm(&m.restricted(&basis, degree))))
        .collect::<Result<_, _>>()
        .map_err(fail)
}
