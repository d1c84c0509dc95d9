//! Seeded generation of orbit instances for each regime, and their JSON file format.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::base_rings::{Fq, ResidueField, Series, SeriesDto};
use crate::biquadratic_core::{EmbeddingPair, PairDto};
use crate::closed_forms::Regime;
use crate::lattice_engine::PrimitivityDatum;
use crate::orbital_integrals::{OrbitError, OrbitInstance};
use crate::quadratic_algebras::{AlgKind, QuadAlg, QuadAlgDto, QuadElem};

pub const INSTANCE_VERSION: &str = "orbfl-instance/1";
pub const DEFAULT_PREC: i32 = 40;

/// Coordinates used by both pairs.
pub const COORDINATES: &str =
    "geometric: K1 ⊗ L with basis 1, g, ζ, ζg; analytic: O_L ⊕ O_L with basis (1, 0), (g, 0), (0, 1), (0, g)";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InstanceError {
    #[error("inconsistent instance spec: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Orbit(#[from] OrbitError),
    #[error("instance file: {0}")]
    File(String),
}

fn unramified() -> AlgKind {
    AlgKind::Unramified
}

fn default_prec() -> i32 {
    DEFAULT_PREC
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub q: u64,
    #[serde(default = "unramified")]
    pub k1_kind: AlgKind,
    /// Chosen from the regime when absent.
    #[serde(default)]
    pub k2_kind: Option<AlgKind>,
    pub regime: Regime,
    pub l_kind: AlgKind,
    #[serde(default)]
    pub r: u32,
    /// `log_q |z^2|_L^{-1}`; required for the uniformizer regime.
    #[serde(default)]
    pub v: Option<u32>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_prec")]
    pub prec: i32,
}

impl InstanceSpec {
    pub fn new(q: u64, regime: Regime, l_kind: AlgKind, r: u32, v: Option<u32>, seed: u64) -> Self {
        InstanceSpec { q, k1_kind: AlgKind::Unramified, k2_kind: None, regime, l_kind, r, v, seed, prec: DEFAULT_PREC }
    }
}

#[derive(Debug, Clone)]
pub struct Generated {
    pub spec: InstanceSpec,
    pub instance: OrbitInstance,
    pub flags: Vec<String>,
}

struct Sampler {
    rng: ChaCha8Rng,
    field: ResidueField,
    prec: i32,
}

impl Sampler {
    fn fq(&mut self) -> Fq {
        let q = self.field.order();
        self.field.elements().nth(self.rng.gen_range(0..q) as usize).expect("index below q")
    }

    fn unit_fq(&mut self) -> Fq {
        loop {
            let x = self.fq();
            if !x.is_zero() {
                return x;
            }
        }
    }

    /// A unit of O_F with a few random higher coefficients.
    fn unit(&mut self) -> Series {
        let mut c = vec![self.unit_fq()];
        for _ in 0..2 {
            c.push(self.fq());
        }
        Series::from_coeffs(self.field, 0, &c, self.prec)
    }

    fn integral(&mut self) -> Series {
        let c: Vec<Fq> = (0..3).map(|_| self.fq()).collect();
        Series::from_coeffs(self.field, 0, &c, self.prec)
    }

    fn coin(&mut self) -> bool {
        self.rng.gen()
    }
}

fn err(msg: impl Into<String>) -> InstanceError {
    InstanceError::Inconsistent(msg.into())
}

fn algebra(kind: AlgKind, twisted: bool, field: ResidueField, prec: i32) -> QuadAlg {
    match kind {
        AlgKind::Ramified => QuadAlg::ramified(field, twisted, prec),
        other => QuadAlg::of_kind(other, field, prec),
    }
}

fn require_k2(spec: &InstanceSpec, needed: AlgKind, why: &str) -> Result<(), InstanceError> {
    match spec.k2_kind {
        Some(k) if k != needed => Err(err(format!("{why} needs K2 {needed}, got {k}"))),
        _ => Ok(()),
    }
}

pub fn generate(spec: &InstanceSpec) -> Result<Generated, InstanceError> {
    if spec.k1_kind != AlgKind::Unramified {
        return Err(err("K1 must be unramified"));
    }
    if spec.k2_kind == Some(AlgKind::Unramified) {
        return Err(err("K2 unramified is isomorphic to K1, so the pair is not biquadratic"));
    }
    let field = ResidueField::with_order(spec.q).map_err(|e| err(e.to_string()))?;
    let prec = spec.prec;
    if prec < 8 {
        return Err(err("precision below 8 is too small for the lattice computations"));
    }
    let mut s = Sampler { rng: ChaCha8Rng::seed_from_u64(spec.seed), field, prec };
    let k1 = QuadAlg::unramified(field, prec);
    let t = |e: i32| Series::t_pow(field, e, prec);
    let mut flags = Vec::new();
    let (k2, w) = match spec.regime {
        Regime::SmallW => {
            if spec.v.is_some_and(|v| v != 2) {
                return Err(err("small w forces v = 2"));
            }
            if spec.r >= 1 {
                require_k2(spec, AlgKind::Ramified, "small w")?;
                let k2 = QuadAlg::ramified(field, s.coin(), prec);
                let l = algebra(spec.l_kind, s.coin(), field, prec);
                let b = s.unit();
                let w = l.elem(&t(1) * &s.integral(), &t(spec.r as i32) * &b);
                (k2, w)
            } else {
                flags.push("boundary: conductor 0 gives |w|_L = |ϖ3|_L".to_string());
                match spec.l_kind {
                    AlgKind::Unramified => {
                        require_k2(spec, AlgKind::Split, "small w with conductor 0 and unramified L")?;
                        let l = QuadAlg::unramified(field, prec);
                        let w = l.gen().add(&l.from_base(&t(1) * &s.unit()));
                        (QuadAlg::split(field, prec), w)
                    }
                    AlgKind::Ramified => {
                        require_k2(spec, AlgKind::Ramified, "small w with conductor 0")?;
                        let tw = s.coin();
                        let l = QuadAlg::ramified(field, tw, prec);
                        let w = l.elem(&t(1) * &s.integral(), s.unit());
                        (QuadAlg::ramified(field, tw, prec), w)
                    }
                    AlgKind::Split => return Err(err("small w with conductor 0 needs L to be a field")),
                }
            }
        }
        Regime::UniformizerW => {
            if spec.l_kind != AlgKind::Ramified || spec.r != 0 {
                return Err(err("a uniformizer w needs ramified L and conductor 0"));
            }
            require_k2(spec, AlgKind::Ramified, "a uniformizer w")?;
            let v = spec.v.ok_or_else(|| err("the uniformizer regime needs v"))?;
            if v < 2 {
                return Err(err(format!(
                    "v = {v} cannot occur for v_L(w) = 1: z^2 = w^2 - ϖ3^2 has v_L(z^2) >= 2"
                )));
            }
            let tw2 = s.coin();
            let c = field.neg(k1.gen_norm().coeff(0));
            let delta = field.add(field.one(), field.mul(field.from_int(4), c));
            let eps = field.nonsquare();
            let half = (v / 2) as i32;
            let (twl, scoef, e) = if v == 2 {
                // same twist: s^2 d_L - d_2 δ = ε^τ t (s^2 - δ) is never divisible by t^2
                (tw2, Series::constant(field, s.unit_fq(), prec), &t(1) * &s.unit())
            } else {
                let ratio = if tw2 { field.mul(delta, eps) } else { field.mul(delta, field.inv(eps).expect("unit")) };
                let root = field.sqrt(ratio).ok_or_else(|| err("δ d_2 / d_L is not a square"))?;
                let root = Series::constant(field, root, prec);
                if v % 2 == 1 {
                    (!tw2, root, &t(half) * &s.unit())
                } else {
                    let x = Series::constant(field, s.unit_fq(), prec);
                    let bump = &Series::one(field, prec) + &(&t(half - 1) * &x);
                    (!tw2, &root * &bump, &t(half) * &s.unit())
                }
            };
            let l = QuadAlg::ramified(field, twl, prec);
            (QuadAlg::ramified(field, tw2, prec), l.elem(e, scoef))
        }
        Regime::UnitW => {
            if spec.v.is_some_and(|v| v != 0) {
                return Err(err("unit z forces v = 0"));
            }
            let k2 = match spec.k2_kind.unwrap_or(AlgKind::Ramified) {
                AlgKind::Split => QuadAlg::split(field, prec),
                _ => QuadAlg::ramified(field, s.coin(), prec),
            };
            let l = algebra(spec.l_kind, s.coin(), field, prec);
            let inter = crate::biquadratic_core::IntermediateGenerator::from_algebras(&k1, &k2);
            let mut found = None;
            for _ in 0..200 {
                let w = l.elem(s.unit(), &t(spec.r as i32) * &s.unit());
                let zsq = crate::biquadratic_core::zsq_in_l(&inter, &w);
                if w.is_unit() && zsq.is_unit() {
                    found = Some(w);
                    break;
                }
            }
            (k2, found.ok_or_else(|| err("no unit w with unit z^2 found"))?)
        }
    };
    let instance = OrbitInstance::assemble(&k1, &k2, &w)?;
    if instance.r != spec.r {
        return Err(err(format!("generated conductor {} differs from requested {}", instance.r, spec.r)));
    }
    if let Some(v) = spec.v {
        if instance.v() != v as i64 {
            return Err(err(format!("generated v = {} differs from requested {v}", instance.v())));
        }
    }
    Ok(Generated { spec: spec.clone(), instance, flags })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub version: String,
    pub spec: InstanceSpec,
    pub q: u64,
    pub prec: i32,
    pub k1: QuadAlgDto,
    pub k2: QuadAlgDto,
    pub l: QuadAlgDto,
    pub w: [SeriesDto; 2],
    pub r: u32,
    pub v: i64,
    pub coordinates: String,
    pub analytic: PairDto,
    pub geometric: Option<PairDto>,
    pub primitivity: PrimitivityDatum,
    pub flags: Vec<String>,
}

impl Generated {
    pub fn to_file(&self) -> InstanceFile {
        let inst = &self.instance;
        InstanceFile {
            version: INSTANCE_VERSION.to_string(),
            spec: self.spec.clone(),
            q: inst.q(),
            prec: inst.l.prec(),
            k1: inst.k1.to_dto(),
            k2: inst.k2.to_dto(),
            l: inst.l.to_dto(),
            w: [inst.w.a().to_dto(), inst.w.b().to_dto()],
            r: inst.r,
            v: inst.v(),
            coordinates: COORDINATES.to_string(),
            analytic: inst.analytic.to_dto(),
            geometric: inst.geometric.as_ref().map(|g| g.pair.to_dto()),
            primitivity: inst.primitivity.clone(),
            flags: self.flags.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("instance files serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, InstanceError> {
        let file: InstanceFile = serde_json::from_str(text).map_err(|e| InstanceError::File(e.to_string()))?;
        Self::from_file(&file)
    }

    /// Rebuilds the orbit from `(K1, K2, L, w)` and checks the stored pairs and invariants against it.
    pub fn from_file(file: &InstanceFile) -> Result<Self, InstanceError> {
        if file.version != INSTANCE_VERSION {
            return Err(InstanceError::File(format!("unsupported version {:?}", file.version)));
        }
        let field = ResidueField::with_order(file.q).map_err(|e| InstanceError::File(e.to_string()))?;
        let bad = |e: &dyn std::fmt::Display| InstanceError::File(e.to_string());
        let k1 = QuadAlg::from_dto(field, &file.k1).map_err(|e| bad(&e))?;
        let k2 = QuadAlg::from_dto(field, &file.k2).map_err(|e| bad(&e))?;
        let l = QuadAlg::from_dto(field, &file.l).map_err(|e| bad(&e))?;
        let a = Series::from_dto(field, &file.w[0]).map_err(|e| bad(&e))?;
        let b = Series::from_dto(field, &file.w[1]).map_err(|e| bad(&e))?;
        let w: QuadElem = l.elem(a, b);
        let instance = OrbitInstance::assemble(&k1, &k2, &w)?;
        if instance.r != file.r || instance.v() != file.v {
            return Err(InstanceError::File("stored conductor or v does not match the orbit".into()));
        }
        let same = |stored: &PairDto, live: &EmbeddingPair| -> Result<bool, InstanceError> {
            let p = EmbeddingPair::from_dto(field, stored).map_err(|e| bad(&e))?;
            Ok(p.side == live.side && p.img_gen1.approx_eq(&live.img_gen1) && p.img_gen2.approx_eq(&live.img_gen2))
        };
        if !same(&file.analytic, &instance.analytic)? {
            return Err(InstanceError::File("stored analytic pair differs from the rebuilt one".into()));
        }
        match (&file.geometric, &instance.geometric) {
            (None, None) => {}
            (Some(p), Some(g)) if same(p, &g.pair)? => {}
            _ => return Err(InstanceError::File("stored geometric pair differs from the rebuilt one".into())),
        }
        Ok(Generated { spec: file.spec.clone(), instance, flags: file.flags.clone() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ramified_k1_is_rejected() {
        let mut spec = InstanceSpec::new(3, Regime::SmallW, AlgKind::Unramified, 1, None, 0);
        spec.k1_kind = AlgKind::Ramified;
        assert!(matches!(generate(&spec), Err(InstanceError::Inconsistent(_))));
    }

    #[test]
    fn conductor_is_as_requested() {
        let spec = InstanceSpec::new(3, Regime::SmallW, AlgKind::Unramified, 2, None, 7);
        let g = generate(&spec).unwrap();
        assert_eq!(g.instance.r, 2);
        assert_eq!(g.instance.v(), 2);
    }

    #[test]
    fn json_round_trip_is_byte_identical() {
        let spec = InstanceSpec::new(3, Regime::UniformizerW, AlgKind::Ramified, 0, Some(3), 11);
        let a = generate(&spec).unwrap().to_json();
        let b = generate(&spec).unwrap().to_json();
        assert_eq!(a, b);
        let back = Generated::from_json(&a).unwrap();
        assert_eq!(back.to_json(), a);
    }

    #[test]
    fn uniformizer_v1_is_unattainable() {
        let spec = InstanceSpec::new(3, Regime::UniformizerW, AlgKind::Ramified, 0, Some(1), 1);
        assert!(matches!(generate(&spec), Err(InstanceError::Inconsistent(_))));
    }
}
