//! The two-term energy `E_η = η^{-2/3} ∫|e(u) - Σχ_i e_i|² + η^{1/3} Σ_i |Dχ_i|`.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::crystallography::{well_strain, PhaseIndex};
use crate::error::{Error, Result};
use crate::fields::{
    for_each_face, symmetric_gradient, Dilated, DisplacementField, PartitionField, ScalarField,
};

/// Exponent of the energy under `x = r x̂`: `E_η̂(û, χ̂) = r^{RESCALING_EXPONENT} E_η(u, χ)`.
pub const RESCALING_EXPONENT: f64 = -3.0 + 2.0 / 3.0;

/// A displacement and phase partition on one domain at interface scale `eta`.
#[derive(Debug, Clone)]
pub struct Microstructure {
    pub u: DisplacementField,
    pub chi: PartitionField,
    pub eta: f64,
}

impl Microstructure {
    pub fn new(u: DisplacementField, chi: PartitionField, eta: f64) -> Result<Self> {
        if !u.domain().same_grid(chi.domain()) {
            return Err(Error::InvalidDomain(
                "displacement and partition live on different grids".into(),
            ));
        }
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "eta = {eta} must be positive"
            )));
        }
        Ok(Self { u, chi, eta })
    }

    pub fn domain(&self) -> &crate::fields::BoxDomain {
        self.chi.domain()
    }

    pub fn with_eta(&self, eta: f64) -> Result<Self> {
        Self::new(self.u.clone(), self.chi.clone(), eta)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnergyOptions {
    /// Also count `|Dχ_0|`, so austenite/martensite faces weigh like twin faces.
    #[serde(default)]
    pub include_austenite: bool,
}

/// Energies at one `eta` with their Lebesgue densities.
#[derive(Debug, Clone, Serialize)]
pub struct EnergyBreakdown {
    pub eta: f64,
    pub elastic: f64,
    pub interfacial: f64,
    pub total: f64,
    #[serde(skip)]
    pub elastic_density: ScalarField,
    #[serde(skip)]
    pub interfacial_density: ScalarField,
}

impl EnergyBreakdown {
    pub const CSV_HEADER: &'static str = "eta,elastic,interfacial,total";

    pub fn csv_row(&self) -> String {
        format!(
            "{:?},{:?},{:?},{:?}",
            self.eta, self.elastic, self.interfacial, self.total
        )
    }
}

/// `η^{-2/3} ∫|e(u) - Σχ_i e_i|²` and its per-cell density.
pub fn elastic_energy(ms: &Microstructure) -> Result<(f64, ScalarField)> {
    let strain = symmetric_gradient(&ms.u)?;
    let scale = ms.eta.powf(-2.0 / 3.0);
    let labels = ms.chi.labels();
    let density: Vec<f64> = strain
        .values()
        .par_iter()
        .zip(labels.par_iter())
        .map(|(e, &l)| scale * (*e - well_strain(l)).norm_squared())
        .collect();
    let field = ScalarField::new(ms.domain().clone(), density)?;
    Ok((field.integral(), field))
}

/// `η^{1/3} Σ_i |Dχ_i|` by face counting; each face's area is split between its two cells.
pub fn interfacial_energy(ms: &Microstructure, opts: EnergyOptions) -> Result<(f64, ScalarField)> {
    let d = ms.domain();
    let labels = ms.chi.labels();
    let counted = |p: PhaseIndex| u8::from(opts.include_austenite || !p.is_austenite());
    let mut density = vec![0.0; d.len()];
    let mut total = 0.0;
    for_each_face(d, |a, b, area| {
        let (la, lb) = (labels[a], labels[b]);
        if la != lb {
            let w = f64::from(counted(la) + counted(lb)) * area;
            total += w;
            density[a] += 0.5 * w;
            density[b] += 0.5 * w;
        }
    });
    let scale = ms.eta.cbrt();
    let inv_vol = scale / d.cell_volume();
    density.par_iter_mut().for_each(|v| *v *= inv_vol);
    Ok((scale * total, ScalarField::new(d.clone(), density)?))
}

pub fn energy(ms: &Microstructure, opts: EnergyOptions) -> Result<EnergyBreakdown> {
    let (elastic, elastic_density) = elastic_energy(ms)?;
    let (interfacial, interfacial_density) = interfacial_energy(ms, opts)?;
    Ok(EnergyBreakdown {
        eta: ms.eta,
        elastic,
        interfacial,
        total: elastic + interfacial,
        elastic_density,
        interfacial_density,
    })
}

/// `x = r x̂`, `û(x̂) = u(r x̂)/r`, `χ̂(x̂) = χ(r x̂)`, `η̂ = η/r`.
///
/// The grid is carried along, so cell `k` of the result samples the point `x_k / r`.
pub fn rescale(ms: &Microstructure, r: f64) -> Result<Microstructure> {
    let domain = ms.domain().dilated(r)?;
    let u = match ms.u.sampler() {
        Some(s) => {
            DisplacementField::from_sampler(domain.clone(), Arc::new(Dilated::new(s.clone(), r)))
        }
        None => DisplacementField::from_samples(
            domain.clone(),
            ms.u.samples().iter().map(|v| v / r).collect(),
        )?,
    };
    let chi = ms.chi.with_domain(domain)?;
    Microstructure::new(u, chi, ms.eta / r)
}
