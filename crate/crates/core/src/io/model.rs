//! Directory layout of a reduced model and of a warm-start store: every
//! factor as an `STRB-DENSE` array plus a `model.txt` / `warmstart.txt`
//! manifest holding dimensions, ranks, scheme and flags.

use super::{DenseArray, Manifest};
use crate::assembly::{ConvectiveAffineSet, IndexMap, ReducedModel, SpaceModel, SpatialOperators, TemporalFactors, Tensor3};
use crate::bases::{FieldBasis, ReducedBasisSet, Spectrum, Truncation};
use crate::error::{Error, Result};
use crate::fom::{BdfScheme, ParamBox};
use crate::solvers::{NniWeighting, WarmStartStore, WarmStartStrategy};
use faer::Mat;
use std::path::Path;

struct Writer<'a> {
    dir: &'a Path,
}

impl Writer<'_> {
    fn mat(&self, name: &str, m: &Mat<f64>) -> Result<()> {
        DenseArray::from_mat(m.as_ref()).write(&self.dir.join(format!("{name}.strb")))
    }

    fn vec(&self, name: &str, v: &[f64]) -> Result<()> {
        DenseArray::from_vec(v).write(&self.dir.join(format!("{name}.strb")))
    }

    fn mats(&self, name: &str, ms: &[Mat<f64>]) -> Result<()> {
        for (k, m) in ms.iter().enumerate() {
            self.mat(&format!("{name}_{k}"), m)?;
        }
        Ok(())
    }

    fn vecs(&self, name: &str, vs: &[Vec<f64>]) -> Result<()> {
        for (k, v) in vs.iter().enumerate() {
            self.vec(&format!("{name}_{k}"), v)?;
        }
        Ok(())
    }
}

struct Reader<'a> {
    dir: &'a Path,
}

impl Reader<'_> {
    fn array(&self, name: &str) -> Result<DenseArray> {
        let path = self.dir.join(format!("{name}.strb"));
        if !path.exists() {
            return Err(Error::Missing(format!("model array {}", path.display())));
        }
        DenseArray::read(&path)
    }

    fn mat(&self, name: &str) -> Result<Mat<f64>> {
        self.array(name)?.to_mat()
    }

    fn vec(&self, name: &str) -> Result<Vec<f64>> {
        self.array(name)?.to_vec()
    }

    fn mats(&self, name: &str, n: usize) -> Result<Vec<Mat<f64>>> {
        (0..n).map(|k| self.mat(&format!("{name}_{k}"))).collect()
    }

    fn vecs(&self, name: &str, n: usize) -> Result<Vec<Vec<f64>>> {
        (0..n).map(|k| self.vec(&format!("{name}_{k}"))).collect()
    }
}

fn truncation_text(t: &Truncation) -> String {
    match t {
        Truncation::Tolerance(e) => format!("tol:{e}"),
        Truncation::Rank(n) => format!("rank:{n}"),
    }
}

fn parse_truncation(s: &str) -> Result<Truncation> {
    let bad = || Error::format("model manifest", format!("bad truncation {s:?}"));
    let (kind, v) = s.split_once(':').ok_or_else(bad)?;
    match kind {
        "tol" => Ok(Truncation::Tolerance(v.parse().map_err(|_| bad())?)),
        "rank" => Ok(Truncation::Rank(v.parse().map_err(|_| bad())?)),
        _ => Err(bad()),
    }
}

fn save_spectrum(w: &Writer, m: &mut Manifest, key: &str, s: &Option<Spectrum>) -> Result<()> {
    if let Some(s) = s {
        w.vec(&format!("{key}_sv"), &s.singular_values)?;
        m.set(&format!("{key}.retained"), s.retained)
            .set(&format!("{key}.discarded_energy"), s.discarded_energy)
            .set(&format!("{key}.truncation"), truncation_text(&s.truncation));
    }
    Ok(())
}

fn load_spectrum(r: &Reader, m: &Manifest, key: &str) -> Result<Option<Spectrum>> {
    let Some(t) = m.raw(&format!("{key}.truncation")) else {
        return Ok(None);
    };
    Ok(Some(Spectrum {
        singular_values: r.vec(&format!("{key}_sv"))?,
        retained: m.get(&format!("{key}.retained"))?,
        discarded_energy: m.get(&format!("{key}.discarded_energy"))?,
        truncation: parse_truncation(t)?,
    }))
}

pub fn save_model(dir: &Path, model: &ReducedModel) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let w = Writer { dir };
    let mut m = Manifest::new();
    let b = &model.bases;
    let fields: Vec<&FieldBasis> = std::iter::once(&b.velocity).chain(&b.constraints).collect();
    for (f, fb) in fields.iter().enumerate() {
        w.mat(&format!("basis_{f}_space"), &fb.spatial)?;
        w.mat(&format!("basis_{f}_time"), &fb.temporal)?;
        save_spectrum(&w, &mut m, &format!("spectrum_{f}_space"), &fb.spatial_spectrum)?;
        save_spectrum(&w, &mut m, &format!("spectrum_{f}_time"), &fb.temporal_spectrum)?;
    }
    let sp = &model.space;
    let op = &sp.operators;
    w.mat("mass", &op.mass)?;
    w.mat("viscous", &op.viscous)?;
    w.mat("wall_mass", &op.wall_mass)?;
    w.mats("wall_stiffness", &op.wall_stiffness)?;
    w.mats("constraint", &op.constraints)?;
    w.vecs("rhs_profile", &op.rhs_profiles)?;
    w.vec("kbar", &sp.convective.kbar)?;
    w.mats("kjac", &sp.convective.kjac)?;
    let t = &model.time;
    w.mat("gram", &t.gram)?;
    w.mats("shifted_gram", &t.shifted)?;
    w.mat("primitive", &t.primitive)?;
    w.mat("primitive_gram", &t.primitive_gram)?;
    w.mats("cross_gram", &t.cross)?;
    DenseArray::new(t.triple.dims.to_vec(), t.triple.data.clone())?.write(&dir.join("triple.strb"))?;
    w.vec("ones", &t.ones)?;
    w.vecs("shifted_ones", &t.shifted_ones)?;
    w.vec("ramp", &t.ramp)?;
    w.vec("ramp_signal", &t.ramp_signal)?;
    w.vecs("constraint_ones", &t.constraint_ones)?;

    let shapes: Vec<String> = (0..model.layout.n_fields())
        .map(|f| {
            let (s, t) = model.layout.shape(f);
            format!("{s}x{t}")
        })
        .collect();
    m.set("format", "stgrb-reduced-model 1")
        .set("fields", fields.len())
        .set_list("shapes", &shapes)
        .set("size", model.size())
        .set("n_steps", model.n_steps())
        .set("bdf_order", sp.scheme.order)
        .set("dt", sp.dt)
        .set("n_c", sp.convective.n_c)
        .set("n_cj", sp.convective.n_cj)
        .set("wall_damping", op.wall_damping)
        .set("velocity_pod_modes", b.velocity_pod_modes)
        .set("supremizers", b.supremizers)
        .set("stabilizers", b.stabilizers)
        .set("lifting", b.lifted);
    m.write(&dir.join("model.txt"))
}

pub fn load_model(dir: &Path) -> Result<ReducedModel> {
    let path = dir.join("model.txt");
    if !path.exists() {
        return Err(Error::Missing("reduced model".into()));
    }
    let m = Manifest::read(&path)?;
    let r = Reader { dir };
    let n_fields: usize = m.get("fields")?;
    if n_fields < 3 {
        return Err(Error::format("model manifest", "need velocity, pressure and at least one multiplier field"));
    }
    let mut fields = Vec::with_capacity(n_fields);
    for f in 0..n_fields {
        let mut fb = FieldBasis::new(r.mat(&format!("basis_{f}_space"))?, r.mat(&format!("basis_{f}_time"))?);
        fb.spatial_spectrum = load_spectrum(&r, &m, &format!("spectrum_{f}_space"))?;
        fb.temporal_spectrum = load_spectrum(&r, &m, &format!("spectrum_{f}_time"))?;
        fields.push(fb);
    }
    let velocity = fields.remove(0);
    let bases = ReducedBasisSet {
        velocity,
        constraints: fields,
        velocity_pod_modes: m.get("velocity_pod_modes")?,
        supremizers: m.get("supremizers")?,
        stabilizers: m.get("stabilizers")?,
        lifted: m.get("lifting")?,
    };
    let n_c: usize = m.get("n_c")?;
    let n_cj: usize = m.get("n_cj")?;
    let n_u = bases.velocity.n_space();
    let n_con = n_fields - 1;
    let scheme = BdfScheme::new(m.get("bdf_order")?)?;
    let kbar = r.vec("kbar")?;
    if kbar.len() != n_c * n_c * n_u {
        return Err(Error::Dimension("stored convective vectors do not match n_c".into()));
    }
    let ws = r.mats("wall_stiffness", 2)?;
    let space = SpaceModel {
        dt: m.get("dt")?,
        operators: SpatialOperators {
            mass: r.mat("mass")?,
            viscous: r.mat("viscous")?,
            wall_mass: r.mat("wall_mass")?,
            wall_stiffness: [ws[0].clone(), ws[1].clone()],
            constraints: r.mats("constraint", n_con)?,
            rhs_profiles: r.vecs("rhs_profile", n_con - 1)?,
            wall_damping: m.get("wall_damping")?,
        },
        convective: ConvectiveAffineSet {
            n_c,
            n_cj,
            n_u,
            kbar,
            kjac: r.mats("kjac", n_cj)?,
        },
        velocity_basis: bases.velocity.spatial.clone(),
        constraint_bases: bases.constraints.iter().map(|b| b.spatial.clone()).collect(),
        scheme: scheme.clone(),
    };
    let tri = r.array("triple")?;
    if tri.dims.len() != 3 {
        return Err(Error::Dimension("temporal triple product must have rank 3".into()));
    }
    let triple = Tensor3 {
        dims: [tri.dims[0], tri.dims[1], tri.dims[2]],
        data: tri.data,
    };
    let s = scheme.steps();
    let time = TemporalFactors {
        gram: r.mat("gram")?,
        shifted: r.mats("shifted_gram", s)?,
        primitive: r.mat("primitive")?,
        primitive_gram: r.mat("primitive_gram")?,
        cross: r.mats("cross_gram", n_con)?,
        triple_nz: triple.nonzeros(),
        triple,
        ones: r.vec("ones")?,
        shifted_ones: r.vecs("shifted_ones", s)?,
        ramp: r.vec("ramp")?,
        ramp_signal: r.vec("ramp_signal")?,
        constraint_ones: r.vecs("constraint_ones", n_con)?,
    };
    let layout = IndexMap::new(std::iter::once(&bases.velocity).chain(&bases.constraints).map(|b| (b.n_space(), b.n_time())).collect());
    if layout.total() != m.get::<usize>("size")? || bases.n_steps() != m.get::<usize>("n_steps")? {
        return Err(Error::Dimension("model manifest disagrees with the stored bases".into()));
    }
    Ok(ReducedModel {
        space,
        bases,
        time,
        layout,
    })
}

pub fn save_warm_start(dir: &Path, store: &WarmStartStore) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let w = Writer { dir };
    let mut m = Manifest::new();
    let rows = |v: &[Vec<f64>], cols: usize| Mat::from_fn(v.len(), cols, |i, j| v[i][j]);
    w.mat("points", &rows(&store.points, store.domain.dim()))?;
    w.mat("coords", &rows(&store.coords, store.dim))?;
    if let Some(theta) = &store.podi_weights {
        w.mat("podi_nodes", &rows(&store.podi_nodes, store.domain.dim()))?;
        w.mat("podi_weights", theta)?;
    }
    m.set("format", "stgrb-warm-start 1")
        .set("strategy", store.strategy.name())
        .set(
            "weighting",
            match store.weighting {
                NniWeighting::Proportional => "proportional",
                NniWeighting::Inverse => "inverse",
            },
        )
        .set("dim", store.dim)
        .set("count", store.len())
        .set_list("lower", &store.domain.lower)
        .set_list("upper", &store.domain.upper);
    m.write(&dir.join("warmstart.txt"))
}

pub fn parse_strategy(s: &str) -> Result<WarmStartStrategy> {
    match s {
        "zero" => Ok(WarmStartStrategy::Zero),
        "average" => Ok(WarmStartStrategy::Average),
        "podi" => Ok(WarmStartStrategy::Podi),
        _ => s
            .strip_prefix("knn")
            .and_then(|k| k.parse().ok())
            .map(WarmStartStrategy::Knn)
            .ok_or_else(|| Error::format("warm-start strategy", format!("unknown strategy {s:?}"))),
    }
}

pub fn load_warm_start(dir: &Path) -> Result<WarmStartStore> {
    let path = dir.join("warmstart.txt");
    if !path.exists() {
        return Err(Error::Missing("warm-start store".into()));
    }
    let m = Manifest::read(&path)?;
    let r = Reader { dir };
    let to_rows = |a: Mat<f64>| -> Vec<Vec<f64>> { (0..a.nrows()).map(|i| (0..a.ncols()).map(|j| a[(i, j)]).collect()).collect() };
    let strategy = parse_strategy(m.raw("strategy").unwrap_or(""))?;
    let weighting = match m.raw("weighting") {
        Some("inverse") => NniWeighting::Inverse,
        Some("proportional") => NniWeighting::Proportional,
        other => return Err(Error::format("warm-start manifest", format!("bad weighting {other:?}"))),
    };
    let podi = strategy == WarmStartStrategy::Podi;
    let store = WarmStartStore {
        strategy,
        weighting,
        domain: ParamBox::new(m.get_list("lower")?, m.get_list("upper")?)?,
        dim: m.get("dim")?,
        points: to_rows(r.mat("points")?),
        coords: to_rows(r.mat("coords")?),
        podi_nodes: if podi { to_rows(r.mat("podi_nodes")?) } else { Vec::new() },
        podi_weights: if podi { Some(r.mat("podi_weights")?) } else { None },
    };
    if store.len() != m.get::<usize>("count")? || store.coords.iter().any(|c| c.len() != store.dim) {
        return Err(Error::Dimension("warm-start arrays disagree with the manifest".into()));
    }
    Ok(store)
}
