use std::collections::BTreeMap;
use std::ops::RangeInclusive;

use rand::seq::index::sample;
use rand::Rng;

use super::{EQ5_CONSTANTS, EQ5_EXPRESSION};
use crate::error::{Error, Result};
use crate::materials::{
    Defect, DefectStructure, DefectType, InteractionType, Kernel, KernelRegistry, Material, Targets,
};

/// Supercell repetitions along each in-plane vector.
pub const SUPERCELL: usize = 8;
const VACUUM: f64 = 20.0;

/// Species and fractional in-plane position of a basis site.
type Site = (&'static str, [f64; 2]);

/// In-plane primitive vectors and sublattice sites of a material. All atoms
/// are projected onto one plane.
fn primitive(material: Material) -> ([f64; 2], [f64; 2], Vec<Site>) {
    let hex = |a: f64, m: &'static str, x: &'static str| {
        (
            [a, 0.0],
            [a / 2.0, a * 3f64.sqrt() / 2.0],
            vec![(m, [0.0, 0.0]), (x, [1.0 / 3.0, 1.0 / 3.0])],
        )
    };
    match material {
        Material::MoS2 => hex(3.19, "Mo", "S"),
        Material::WSe2 => hex(3.28, "W", "Se"),
        Material::HBn => hex(2.50, "B", "N"),
        Material::GaSe => hex(3.75, "Ga", "Se"),
        Material::InSe => hex(4.00, "In", "Se"),
        Material::BP => ([3.31, 0.0], [0.0, 4.38], vec![("P", [0.0, 0.0]), ("P", [0.5, 0.5])]),
    }
}

/// Cell matrix (rows = lattice vectors) and all host sites of an
/// `n × n` supercell.
pub fn supercell(material: Material, n: usize) -> ([f64; 9], Vec<(&'static str, [f64; 3])>) {
    let (a, b, basis) = primitive(material);
    let nf = n as f64;
    let cell = [a[0] * nf, a[1] * nf, 0.0, b[0] * nf, b[1] * nf, 0.0, 0.0, 0.0, VACUUM];
    let mut sites = Vec::with_capacity(n * n * basis.len());
    for i in 0..n {
        for j in 0..n {
            for (species, f) in &basis {
                let (u, v) = (i as f64 + f[0], j as f64 + f[1]);
                sites.push((*species, [u * a[0] + v * b[0], u * a[1] + v * b[1], 0.0]));
            }
        }
    }
    (cell, sites)
}

/// Brute-force periodic distance scanning images up to two cells away.
fn image_scan_distance(s: &DefectStructure, i: usize, j: usize) -> f64 {
    let (p, q) = (s.defects[i].position, s.defects[j].position);
    let mut best = f64::INFINITY;
    for u in -2..=2 {
        for v in -2..=2 {
            let (u, v) = (u as f64, v as f64);
            let d: Vec<f64> = (0..3)
                .map(|k| q[k] - p[k] + u * s.cell[k] + v * s.cell[3 + k])
                .collect();
            best = best.min((d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt());
        }
    }
    best
}

fn kernel_value(map: &BTreeMap<InteractionType, Kernel>, t: InteractionType, r: f64) -> Result<f64> {
    let k = map.get(&t).ok_or_else(|| Error::MissingKernel(t.to_string()))?;
    k.eval(r)
        .ok_or_else(|| Error::KernelPredicate(t.to_string(), format!("domain-error at r={r}")))
}

/// Per-site formation energy by the ordered double loop
/// `(Σ_i E_i + ½ Σ_{i≠j} V(r_ij)) / N`.
pub fn formation_oracle(s: &DefectStructure, reg: &KernelRegistry) -> Result<f64> {
    let n = s.defects.len();
    let mut total = 0.0;
    for d in &s.defects {
        let t = d.defect_type();
        total += reg
            .self_energy
            .get(&t)
            .ok_or_else(|| Error::MissingSelfEnergy(t.to_string()))?;
    }
    let mut pair_sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let t = InteractionType::new(s.defects[i].defect_type(), s.defects[j].defect_type());
                pair_sum += kernel_value(&reg.kernels, t, image_scan_distance(s, i, j))?;
            }
        }
    }
    Ok((total + 0.5 * pair_sum) / n as f64)
}

/// Gap as the minimum over all ordered pairs, or the single-defect constant.
pub fn gap_oracle(s: &DefectStructure, reg: &KernelRegistry) -> Result<f64> {
    let n = s.defects.len();
    if n == 1 {
        let t = s.defects[0].defect_type();
        return reg
            .single_gap
            .get(&t)
            .copied()
            .ok_or_else(|| Error::MissingGap(t.to_string()));
    }
    let mut values = Vec::with_capacity(n * (n - 1));
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let t = InteractionType::new(s.defects[i].defect_type(), s.defects[j].defect_type());
                values.push(kernel_value(&reg.gap_kernels, t, image_scan_distance(s, i, j))?);
            }
        }
    }
    Ok(values.into_iter().fold(f64::INFINITY, f64::min))
}

fn check_complete(reg: &KernelRegistry, types: &[DefectType], gap: bool) -> Result<()> {
    for (i, a) in types.iter().enumerate() {
        if !reg.self_energy.contains_key(a) {
            return Err(Error::MissingSelfEnergy(a.to_string()));
        }
        if gap && !reg.single_gap.contains_key(a) {
            return Err(Error::MissingGap(a.to_string()));
        }
        for b in &types[i..] {
            let t = InteractionType::new(a.clone(), b.clone());
            if !reg.kernels.contains_key(&t) || (gap && !reg.gap_kernels.contains_key(&t)) {
                return Err(Error::MissingKernel(t.to_string()));
            }
        }
    }
    Ok(())
}

/// Random structures in an 8×8 supercell with exact targets from the
/// registry's own kernels. Defect types are those of the registry allowed
/// for `material`; gap targets are filled when the registry has gap kernels.
pub fn fabricate_structures<R: Rng + ?Sized>(
    material: Material,
    reg: &KernelRegistry,
    n_structures: usize,
    defect_counts: RangeInclusive<usize>,
    rng: &mut R,
) -> Result<Vec<DefectStructure>> {
    let types: Vec<DefectType> = reg.self_energy.keys().filter(|t| material.allows(t)).cloned().collect();
    if types.is_empty() {
        return Err(Error::InvalidConfig(format!(
            "registry has no {material} defect types with self energies"
        )));
    }
    let with_gap = !reg.gap_kernels.is_empty();
    check_complete(reg, &types, with_gap)?;

    let (cell, sites) = supercell(material, SUPERCELL);
    let hosts: Vec<usize> = (0..sites.len())
        .filter(|&i| types.iter().any(|t| t.site_species() == sites[i].0))
        .collect();
    let (lo, hi) = (*defect_counts.start(), *defect_counts.end());
    if lo == 0 || lo > hi || hi > hosts.len() {
        return Err(Error::InvalidConfig(format!(
            "defect counts {lo}..={hi} must lie within 1..={}",
            hosts.len()
        )));
    }

    let mut out = Vec::with_capacity(n_structures);
    for _ in 0..n_structures {
        let n = rng.random_range(lo..=hi);
        let picked = sample(rng, hosts.len(), n);
        let mut defects = Vec::with_capacity(n);
        for k in picked.iter() {
            let (species, pos) = sites[hosts[k]];
            let options: Vec<&DefectType> = types.iter().filter(|t| t.site_species() == species).collect();
            let t = options[rng.random_range(0..options.len())];
            defects.push(Defect::of_type(t, pos));
        }
        let s = DefectStructure::new(material, cell, defects)?;
        let targets = Targets {
            formation_energy_eV: Some(formation_oracle(&s, reg)?),
            homo_lumo_gap_eV: if with_gap { Some(gap_oracle(&s, reg)?) } else { None },
        };
        out.push(s.with_targets(targets));
    }
    Ok(out)
}

/// Synthetic MoS2 registry over four common defect types. The Mo/S
/// vacancy pair uses `V(r) = 2·(f(r) − 4.895)` with `f` the per-site
/// vacancy-pair kernel; the other pairs are damped oscillations. All
/// numbers are synthetic.
pub fn demo_registry() -> KernelRegistry {
    let domain = (0.5, 15.0);
    let vac_mo = DefectType::vacancy("Mo");
    let vac_s = DefectType::vacancy("S");
    let sub_w = DefectType::substitution("Mo", "W");
    let sub_se = DefectType::substitution("S", "Se");
    let types = [vac_mo.clone(), vac_s.clone(), sub_se.clone(), sub_w.clone()];

    let mut reg = KernelRegistry::new();
    // E_Mo + E_S = 2 · 4.895
    for (t, e, g) in [
        (&vac_mo, 6.99, 1.05),
        (&vac_s, 2.80, 1.62),
        (&sub_se, 0.31, 1.78),
        (&sub_w, 0.22, 1.80),
    ] {
        reg.self_energy.insert(t.clone(), e);
        reg.single_gap.insert(t.clone(), g);
    }

    let vac_pair = InteractionType::new(vac_mo, vac_s);
    let mut eq5_v = EQ5_CONSTANTS.to_vec();
    eq5_v[0] = 2.0;
    let eq5_v_expr = EQ5_EXPRESSION.replacen("add C0", "mul C0", 1);
    let mut k = 0usize;
    for (i, a) in types.iter().enumerate() {
        for b in &types[i..] {
            let t = InteractionType::new(a.clone(), b.clone());
            let kf = k as f64;
            let kernel = if t == vac_pair {
                Kernel::from_text(&eq5_v_expr, eq5_v.clone(), domain)
            } else {
                // A·e^(−r/λ)·cos(q·r)
                Kernel::from_text(
                    "mul C0 mul exp mul C1 x cos mul C2 x",
                    vec![0.4 - 0.07 * kf, -1.0 / (1.5 + 0.2 * kf), 1.1 + 0.15 * kf],
                    domain,
                )
            };
            let gap = Kernel::from_text(
                "sub C0 mul C1 exp mul C2 x",
                vec![1.7 - 0.05 * kf, 0.9 + 0.04 * kf, -1.0 / (1.2 + 0.1 * kf)],
                domain,
            );
            reg.kernels.insert(t.clone(), kernel.expect("valid demo kernel"));
            reg.gap_kernels.insert(t, gap.expect("valid demo gap kernel"));
            k += 1;
        }
    }
    reg
}
