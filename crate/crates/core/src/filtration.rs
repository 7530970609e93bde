//! Dyadic filtrations of partitions over a materialized bounding box.
//!
//! Axis `i` at level `n` is cut into half-open intervals of length
//! `2^{-n k(i)}`, so every level partitions the box, each cell has exactly one
//! parent, and `|parent| / |child| = 2^{k(1) + ... + k(D)}`. The isotropic
//! preset (`k = 1`) gives the usual dyadic cubes; the parabolic preset gives
//! `[0, 4^{-n}) x [0, 2^{-n})^d` in `(t, x)`.
//!
//! Fields are piecewise constant on the finest cells and stored row-major
//! (axis 0 slowest).

use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hard cap on the number of finest cells a filtration may materialize.
pub const MAX_FINEST_CELLS: usize = 1 << 26;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisDomain {
    Line,
    HalfLine,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "geometry", rename_all = "snake_case")]
pub enum Geometry {
    /// `R^d`.
    Full { d: usize },
    /// `{x_1 >= 0}` in `R^d`; axis 0 is `x_1`.
    Half { d: usize },
    /// `{t >= 0}` in `R^{d+1}`; axis 0 is time.
    Parabolic { d: usize },
    /// Product of lines and half-lines, one entry per axis.
    Product { axes: Vec<AxisDomain> },
}

impl Geometry {
    pub fn dims(&self) -> usize {
        match self {
            Geometry::Full { d } | Geometry::Half { d } => *d,
            Geometry::Parabolic { d } => d + 1,
            Geometry::Product { axes } => axes.len(),
        }
    }

    /// Coordinate index of `x_1`.
    pub fn x1_axis(&self) -> usize {
        usize::from(matches!(self, Geometry::Parabolic { .. }))
    }

    pub fn axis_domain(&self, axis: usize) -> AxisDomain {
        match self {
            Geometry::Full { .. } => AxisDomain::Line,
            Geometry::Half { .. } | Geometry::Parabolic { .. } => {
                if axis == 0 {
                    AxisDomain::HalfLine
                } else {
                    AxisDomain::Line
                }
            }
            Geometry::Product { axes } => axes[axis],
        }
    }
}

/// Declarative description of a truncated filtration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiltrationSpec {
    #[serde(flatten)]
    pub geometry: Geometry,
    pub k: Vec<u32>,
    pub n_min: i32,
    pub n_max: i32,
    #[serde(rename = "box")]
    pub bounds: Vec<[f64; 2]>,
}

impl FiltrationSpec {
    /// Isotropic dyadic cubes on a box in `R^d`.
    pub fn full(d: usize, n_min: i32, n_max: i32, bounds: Vec<[f64; 2]>) -> Self {
        Self {
            geometry: Geometry::Full { d },
            k: vec![1; d],
            n_min,
            n_max,
            bounds,
        }
    }

    /// Dyadic cubes lying in the half-space `{x_1 >= 0}`.
    pub fn half(d: usize, n_min: i32, n_max: i32, bounds: Vec<[f64; 2]>) -> Self {
        Self {
            geometry: Geometry::Half { d },
            k: vec![1; d],
            n_min,
            n_max,
            bounds,
        }
    }

    /// Parabolic cells `[0, 4^{-n}) x [0, 2^{-n})^d`; `bounds[0]` is time.
    pub fn parabolic(d: usize, n_min: i32, n_max: i32, bounds: Vec<[f64; 2]>) -> Self {
        let mut k = vec![1; d + 1];
        k[0] = 2;
        Self {
            geometry: Geometry::Parabolic { d },
            k,
            n_min,
            n_max,
            bounds,
        }
    }

    pub fn dims(&self) -> usize {
        self.geometry.dims()
    }

    /// Regularity constant `N_0 = 2^{sum k(i)}`.
    pub fn n0(&self) -> f64 {
        let s: u32 = self.k.iter().sum();
        2f64.powi(s as i32)
    }

    /// Side of a level-`n` cell along `axis`.
    pub fn side(&self, level: i32, axis: usize) -> f64 {
        2f64.powi(-level * self.k[axis] as i32)
    }

    pub fn validate(&self) -> Result<()> {
        let dims = self.dims();
        let bad = |m: String| Err(Error::InvalidFiltration(m));
        if dims == 0 {
            return bad("dimension must be positive".into());
        }
        if self.k.len() != dims {
            return bad(format!("k has {} entries, geometry has {dims} axes", self.k.len()));
        }
        if self.k.iter().any(|&k| k == 0) {
            return bad("anisotropy exponents must be positive".into());
        }
        if self.bounds.len() != dims {
            return bad(format!("box has {} axes, geometry has {dims}", self.bounds.len()));
        }
        if self.n_min > self.n_max {
            return bad(format!("empty level range [{}, {}]", self.n_min, self.n_max));
        }
        for (axis, &[lo, hi]) in self.bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return bad(format!("axis {axis}: box [{lo}, {hi}] is empty or not finite"));
            }
            if self.geometry.axis_domain(axis) == AxisDomain::HalfLine && lo < 0.0 {
                return bad(format!("axis {axis} is a half-line but the box starts at {lo}"));
            }
            let coarse = self.side(self.n_min, axis);
            for (what, v) in [("lower corner", lo), ("length", hi - lo)] {
                let ratio = v / coarse;
                if (ratio - ratio.round()).abs() > 1e-9 * ratio.abs().max(1.0) {
                    return bad(format!(
                        "axis {axis}: box {what} {v} is not a multiple of the coarsest side {coarse}"
                    ));
                }
            }
        }
        let mut total: usize = 1;
        for axis in 0..dims {
            let n = self.finest_count(axis);
            total = total.checked_mul(n).unwrap_or(usize::MAX);
        }
        if total > MAX_FINEST_CELLS {
            return bad(format!("{total} finest cells exceeds the cap {MAX_FINEST_CELLS}"));
        }
        Ok(())
    }

    fn finest_count(&self, axis: usize) -> usize {
        let [lo, hi] = self.bounds[axis];
        ((hi - lo) / self.side(self.n_max, axis)).round() as usize
    }

    /// The same filtration after the dilation `x_i -> 2^{s k(i)} x_i`, with
    /// levels relabelled so each cell keeps its place in the hierarchy.
    pub fn dilated(&self, s: i32) -> Self {
        let mut out = self.clone();
        out.n_min += s;
        out.n_max += s;
        for (axis, b) in out.bounds.iter_mut().enumerate() {
            let f = 2f64.powi(-s * self.k[axis] as i32);
            b[0] *= f;
            b[1] *= f;
        }
        out
    }
}

/// A single cell `C` of some level.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasureCell {
    pub level: i32,
    /// Position of the cell in the level's row-major ordering.
    pub flat: usize,
    /// Local multi-index within the box at this level.
    pub index: Vec<usize>,
    pub volume: f64,
}

/// A validated filtration with navigation helpers.
#[derive(Clone, Debug)]
pub struct Filtration {
    spec: FiltrationSpec,
    finest: Vec<usize>,
}

impl PartialEq for Filtration {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec
    }
}

pub fn build_filtration(spec: FiltrationSpec) -> Result<Arc<Filtration>> {
    Filtration::new(spec).map(Arc::new)
}

impl Filtration {
    pub fn new(spec: FiltrationSpec) -> Result<Self> {
        spec.validate()?;
        let finest = (0..spec.dims()).map(|a| spec.finest_count(a)).collect();
        Ok(Self { spec, finest })
    }

    pub fn spec(&self) -> &FiltrationSpec {
        &self.spec
    }

    pub fn dims(&self) -> usize {
        self.finest.len()
    }

    pub fn n0(&self) -> f64 {
        self.spec.n0()
    }

    pub fn n_min(&self) -> i32 {
        self.spec.n_min
    }

    pub fn n_max(&self) -> i32 {
        self.spec.n_max
    }

    pub fn levels(&self) -> std::ops::RangeInclusive<i32> {
        self.spec.n_min..=self.spec.n_max
    }

    pub fn check_level(&self, level: i32) -> Result<()> {
        if self.levels().contains(&level) {
            Ok(())
        } else {
            Err(Error::LevelOutOfRange {
                level,
                n_min: self.spec.n_min,
                n_max: self.spec.n_max,
            })
        }
    }

    /// Cells per axis at `level`.
    pub fn level_shape(&self, level: i32) -> Vec<usize> {
        self.finest
            .iter()
            .zip(&self.spec.k)
            .map(|(&n, &k)| n >> ((self.spec.n_max - level) as u32 * k))
            .collect()
    }

    pub fn cell_count(&self, level: i32) -> usize {
        self.level_shape(level).iter().product()
    }

    pub fn finest_len(&self) -> usize {
        self.finest.iter().product()
    }

    pub fn cell_volume(&self, level: i32) -> f64 {
        (0..self.dims()).map(|a| self.spec.side(level, a)).product()
    }

    pub fn finest_volume(&self) -> f64 {
        self.cell_volume(self.spec.n_max)
    }

    pub fn box_volume(&self) -> f64 {
        self.spec.bounds.iter().map(|[lo, hi]| hi - lo).product()
    }

    /// Maps every level-`fine` cell to the level-`coarse` cell containing it.
    pub fn ancestor_map(&self, fine: i32, coarse: i32) -> Vec<usize> {
        debug_assert!(coarse <= fine);
        let fine_shape = self.level_shape(fine);
        let coarse_shape = self.level_shape(coarse);
        let shifts: Vec<u32> = self
            .spec
            .k
            .iter()
            .map(|&k| (fine - coarse) as u32 * k)
            .collect();
        let len: usize = fine_shape.iter().product();
        let mut out = Vec::with_capacity(len);
        let mut idx = vec![0usize; self.dims()];
        for _ in 0..len {
            let mut flat = 0;
            for a in 0..self.dims() {
                flat = flat * coarse_shape[a] + (idx[a] >> shifts[a]);
            }
            out.push(flat);
            increment(&mut idx, &fine_shape);
        }
        out
    }

    /// Level-`level` cell containing each finest cell.
    pub fn level_map(&self, level: i32) -> Vec<usize> {
        self.ancestor_map(self.spec.n_max, level)
    }

    pub fn cell(&self, level: i32, flat: usize) -> MeasureCell {
        let index = unflatten(flat, &self.level_shape(level));
        MeasureCell {
            level,
            flat,
            index,
            volume: self.cell_volume(level),
        }
    }

    pub fn cells(&self, level: i32) -> impl Iterator<Item = MeasureCell> + '_ {
        (0..self.cell_count(level)).map(move |f| self.cell(level, f))
    }

    pub fn parent(&self, cell: &MeasureCell) -> Option<MeasureCell> {
        if cell.level <= self.spec.n_min {
            return None;
        }
        let level = cell.level - 1;
        let index: Vec<usize> = cell
            .index
            .iter()
            .zip(&self.spec.k)
            .map(|(&i, &k)| i >> k)
            .collect();
        let flat = flatten(&index, &self.level_shape(level));
        Some(MeasureCell {
            level,
            flat,
            index,
            volume: self.cell_volume(level),
        })
    }

    pub fn children(&self, cell: &MeasureCell) -> Vec<MeasureCell> {
        if cell.level >= self.spec.n_max {
            return Vec::new();
        }
        let level = cell.level + 1;
        let shape = self.level_shape(level);
        let fan: Vec<usize> = self.spec.k.iter().map(|&k| 1usize << k).collect();
        let count: usize = fan.iter().product();
        let mut off = vec![0usize; self.dims()];
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            let index: Vec<usize> = cell
                .index
                .iter()
                .zip(&self.spec.k)
                .zip(&off)
                .map(|((&i, &k), &o)| (i << k) + o)
                .collect();
            out.push(MeasureCell {
                level,
                flat: flatten(&index, &shape),
                index,
                volume: self.cell_volume(level),
            });
            increment(&mut off, &fan);
        }
        out
    }

    /// Lower and upper corners of a cell.
    pub fn cell_bounds(&self, cell: &MeasureCell) -> (Vec<f64>, Vec<f64>) {
        let lo: Vec<f64> = (0..self.dims())
            .map(|a| self.spec.bounds[a][0] + cell.index[a] as f64 * self.spec.side(cell.level, a))
            .collect();
        let hi = lo
            .iter()
            .enumerate()
            .map(|(a, l)| l + self.spec.side(cell.level, a))
            .collect();
        (lo, hi)
    }

    /// Centre of each finest cell, row-major.
    pub fn finest_centers(&self) -> Vec<Vec<f64>> {
        let h: Vec<f64> = (0..self.dims()).map(|a| self.spec.side(self.spec.n_max, a)).collect();
        let mut idx = vec![0usize; self.dims()];
        let mut out = Vec::with_capacity(self.finest_len());
        for _ in 0..self.finest_len() {
            out.push(
                (0..self.dims())
                    .map(|a| self.spec.bounds[a][0] + (idx[a] as f64 + 0.5) * h[a])
                    .collect(),
            );
            increment(&mut idx, &self.finest);
        }
        out
    }

    pub fn finest_shape(&self) -> &[usize] {
        &self.finest
    }
}

pub(crate) fn increment(idx: &mut [usize], shape: &[usize]) {
    for a in (0..idx.len()).rev() {
        idx[a] += 1;
        if idx[a] < shape[a] {
            return;
        }
        idx[a] = 0;
    }
}

pub(crate) fn flatten(idx: &[usize], shape: &[usize]) -> usize {
    idx.iter().zip(shape).fold(0, |acc, (&i, &n)| acc * n + i)
}

pub(crate) fn unflatten(mut flat: usize, shape: &[usize]) -> Vec<usize> {
    let mut idx = vec![0; shape.len()];
    for a in (0..shape.len()).rev() {
        idx[a] = flat % shape[a];
        flat /= shape[a];
    }
    idx
}

/// Cell averages of a field at every level, finest first.
#[derive(Clone, Debug)]
pub struct Pyramid {
    n_max: i32,
    levels: Vec<Vec<f64>>,
    maps: Vec<Vec<usize>>,
}

impl Pyramid {
    /// Builds averages of `values` (finest cells) at all levels by averaging
    /// children, which is the tower property `(f|_n)|_{n-1} = f|_{n-1}`.
    pub fn build(filtration: &Filtration, values: &[f64]) -> Self {
        let n0 = filtration.n0();
        let mut levels = vec![values.to_vec()];
        let mut maps = vec![(0..values.len()).collect::<Vec<_>>()];
        let mut finest_to_level: Vec<usize> = maps[0].clone();
        for level in (filtration.n_min()..filtration.n_max()).rev() {
            let up = filtration.ancestor_map(level + 1, level);
            let mut sums = vec![0.0; filtration.cell_count(level)];
            let prev = levels.last().unwrap();
            for (child, &parent) in up.iter().enumerate() {
                sums[parent] += prev[child];
            }
            for s in &mut sums {
                *s /= n0;
            }
            finest_to_level = finest_to_level.iter().map(|&c| up[c]).collect();
            maps.push(finest_to_level.clone());
            levels.push(sums);
        }
        Self {
            n_max: filtration.n_max(),
            levels,
            maps,
        }
    }

    /// Cell averages at `level`.
    pub fn averages(&self, level: i32) -> &[f64] {
        &self.levels[(self.n_max - level) as usize]
    }

    /// Finest-cell to level-cell map.
    pub fn map(&self, level: i32) -> &[usize] {
        &self.maps[(self.n_max - level) as usize]
    }

    /// `f|_n` evaluated at finest cell `i`.
    pub fn at(&self, level: i32, i: usize) -> f64 {
        let k = (self.n_max - level) as usize;
        self.levels[k][self.maps[k][i]]
    }
}

/// Piecewise-constant function on the finest cells of a filtration.
#[derive(Clone, Debug)]
pub struct DiscreteField {
    filtration: Arc<Filtration>,
    values: Vec<f64>,
}

impl DiscreteField {
    pub fn new(filtration: Arc<Filtration>, values: Vec<f64>) -> Result<Self> {
        if values.len() != filtration.finest_len() {
            return Err(Error::param(format!(
                "field has {} values, filtration has {} finest cells",
                values.len(),
                filtration.finest_len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::param(format!("non-finite value at cell {i}")));
        }
        Ok(Self { filtration, values })
    }

    pub fn zeros(filtration: Arc<Filtration>) -> Self {
        let n = filtration.finest_len();
        Self {
            filtration,
            values: vec![0.0; n],
        }
    }

    /// Samples `f` at the finest cell centres.
    pub fn from_fn(filtration: Arc<Filtration>, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let values = filtration.finest_centers().iter().map(|c| f(c)).collect();
        Self::new(filtration, values)
    }

    pub fn filtration(&self) -> &Arc<Filtration> {
        &self.filtration
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub(crate) fn with_values(&self, values: Vec<f64>) -> Self {
        Self {
            filtration: Arc::clone(&self.filtration),
            values,
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        self.with_values(self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn abs(&self) -> Self {
        self.map(f64::abs)
    }

    pub fn same_domain(&self, other: &DiscreteField) -> bool {
        Arc::ptr_eq(&self.filtration, &other.filtration) || *self.filtration == *other.filtration
    }

    pub fn check_domain(&self, other: &DiscreteField) -> Result<()> {
        if self.same_domain(other) {
            Ok(())
        } else {
            Err(Error::DomainMismatch)
        }
    }

    pub fn zip_with(&self, other: &DiscreteField, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_domain(other)?;
        Ok(self.with_values(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }

    /// `int f dmu` over the box.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.filtration.finest_volume()
    }

    /// `int f I_{mask} dmu`.
    pub fn integral_where(&self, mask: impl Fn(usize) -> bool) -> f64 {
        let s: f64 = self
            .values
            .iter()
            .enumerate()
            .filter(|(i, _)| mask(*i))
            .map(|(_, v)| v)
            .sum();
        s * self.filtration.finest_volume()
    }

    /// `(int |f|^p dmu)^{1/p}`.
    pub fn lp_norm(&self, p: f64) -> f64 {
        let s: f64 = self.values.iter().map(|v| v.abs().powf(p)).sum();
        (s * self.filtration.finest_volume()).powf(1.0 / p)
    }

    pub fn pyramid(&self) -> Pyramid {
        Pyramid::build(&self.filtration, &self.values)
    }

    /// Largest level-`n_min` average; stands in for averages below the
    /// materialized range.
    pub fn coarsest_max_average(&self) -> f64 {
        let p = self.pyramid();
        p.averages(self.filtration.n_min())
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Average over the whole box.
    pub fn box_average(&self) -> f64 {
        self.integral() / self.filtration.box_volume()
    }

    /// CSV with one row per finest cell: local multi-index then value.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let dims = self.filtration.dims();
        let mut header: Vec<String> = (0..dims).map(|a| format!("i{a}")).collect();
        header.push("value".into());
        w.write_record(&header)?;
        let shape = self.filtration.finest_shape().to_vec();
        let mut idx = vec![0usize; dims];
        for v in &self.values {
            let mut row: Vec<String> = idx.iter().map(|i| i.to_string()).collect();
            row.push(format!("{v:?}"));
            w.write_record(&row)?;
            increment(&mut idx, &shape);
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(filtration: Arc<Filtration>, reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let dims = filtration.dims();
        let shape = filtration.finest_shape().to_vec();
        let mut values = vec![f64::NAN; filtration.finest_len()];
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            if rec.len() != dims + 1 {
                return Err(Error::param(format!(
                    "csv row {}: expected {} columns, found {}",
                    line + 2,
                    dims + 1,
                    rec.len()
                )));
            }
            let mut idx = Vec::with_capacity(dims);
            for a in 0..dims {
                let i: usize = rec[a]
                    .trim()
                    .parse()
                    .map_err(|_| Error::param(format!("csv row {}: bad index '{}'", line + 2, &rec[a])))?;
                if i >= shape[a] {
                    return Err(Error::param(format!("csv row {}: index {i} out of range", line + 2)));
                }
                idx.push(i);
            }
            let v: f64 = rec[dims]
                .trim()
                .parse()
                .map_err(|_| Error::param(format!("csv row {}: bad value '{}'", line + 2, &rec[dims])))?;
            values[flatten(&idx, &shape)] = v;
        }
        if let Some(i) = values.iter().position(|v| v.is_nan()) {
            return Err(Error::param(format!("csv is missing finest cell {i}")));
        }
        Self::new(filtration, values)
    }

    /// Raw layout: finest-cell values as little-endian `f64`, row-major,
    /// no header.
    pub fn write_raw<W: Write>(&self, mut writer: W) -> Result<()> {
        for v in &self.values {
            writer.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_raw<R: Read>(filtration: Arc<Filtration>, mut reader: R) -> Result<Self> {
        let mut bytes = Vec::new();
        reader.read_to_end(&mut bytes)?;
        let n = filtration.finest_len();
        if bytes.len() != 8 * n {
            return Err(Error::param(format!(
                "raw field has {} bytes, expected {}",
                bytes.len(),
                8 * n
            )));
        }
        let values = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Self::new(filtration, values)
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

/// `f|_n`: the field replaced on each level-`n` cell by its average.
pub fn conditional_average(f: &DiscreteField, level: i32) -> Result<DiscreteField> {
    f.filtration.check_level(level)?;
    let p = f.pyramid();
    let avg = p.averages(level);
    let map = p.map(level);
    Ok(f.with_values(map.iter().map(|&c| avg[c]).collect()))
}

/// Level-valued function on the finest cells; `None` is `+infinity`.
#[derive(Clone, Debug)]
pub struct StoppingTime {
    filtration: Arc<Filtration>,
    tau: Vec<Option<i32>>,
}

impl StoppingTime {
    /// Validates that each level set `{tau = n}` is a union of level-`n`
    /// cells.
    pub fn new(filtration: Arc<Filtration>, tau: Vec<Option<i32>>) -> Result<Self> {
        if tau.len() != filtration.finest_len() {
            return Err(Error::InvalidStoppingTime(format!(
                "{} entries for {} finest cells",
                tau.len(),
                filtration.finest_len()
            )));
        }
        let st = Self { filtration, tau };
        st.check_alignment()?;
        Ok(st)
    }

    /// Constant stopping time.
    pub fn constant(filtration: Arc<Filtration>, level: Option<i32>) -> Result<Self> {
        let n = filtration.finest_len();
        Self::new(filtration, vec![level; n])
    }

    fn check_alignment(&self) -> Result<()> {
        let f = &self.filtration;
        for (i, t) in self.tau.iter().enumerate() {
            if let Some(n) = t {
                if f.check_level(*n).is_err() {
                    return Err(Error::InvalidStoppingTime(format!(
                        "cell {i} stops at level {n}, outside [{}, {}]",
                        f.n_min(),
                        f.n_max()
                    )));
                }
            }
        }
        for level in f.levels() {
            let map = f.level_map(level);
            let mut state = vec![0u8; f.cell_count(level)];
            for (i, t) in self.tau.iter().enumerate() {
                let hit = if *t == Some(level) { 1 } else { 2 };
                let s = &mut state[map[i]];
                if *s == 0 {
                    *s = hit;
                } else if *s != hit {
                    return Err(Error::InvalidStoppingTime(format!(
                        "{{tau = {level}}} cuts through level-{level} cell {}",
                        map[i]
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn filtration(&self) -> &Arc<Filtration> {
        &self.filtration
    }

    pub fn values(&self) -> &[Option<i32>] {
        &self.tau
    }

    pub fn is_finite(&self, i: usize) -> bool {
        self.tau[i].is_some()
    }

    /// `|{tau < infinity}|`.
    pub fn finite_measure(&self) -> f64 {
        self.tau.iter().filter(|t| t.is_some()).count() as f64 * self.filtration.finest_volume()
    }

    /// Re-checks the defining property; always true for values built by
    /// [`StoppingTime::new`].
    pub fn is_aligned(&self) -> bool {
        self.check_alignment().is_ok()
    }
}

/// Calderon-Zygmund stopping time `tau(x) = inf{n : g|_n(x) > lambda}`,
/// scanning the materialized levels from the coarsest.
pub fn cz_stopping_time(g: &DiscreteField, lambda: f64) -> Result<StoppingTime> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::NonPositiveThreshold(lambda));
    }
    if let Some((index, &value)) = g.values.iter().enumerate().find(|(_, v)| **v < 0.0) {
        return Err(Error::NegativeValue { index, value });
    }
    let f = &g.filtration;
    let p = g.pyramid();
    let mut tau = vec![None; g.len()];
    for level in f.levels() {
        let avg = p.averages(level);
        let map = p.map(level);
        for (i, t) in tau.iter_mut().enumerate() {
            if t.is_none() && avg[map[i]] > lambda {
                *t = Some(level);
            }
        }
    }
    Ok(StoppingTime {
        filtration: Arc::clone(f),
        tau,
    })
}

/// `f|_tau`: the level-`tau(x)` average where `tau` is finite, `f` elsewhere.
pub fn stopped_value(f: &DiscreteField, tau: &StoppingTime) -> Result<DiscreteField> {
    if !(Arc::ptr_eq(&f.filtration, &tau.filtration) || *f.filtration == *tau.filtration) {
        return Err(Error::DomainMismatch);
    }
    let p = f.pyramid();
    let values = tau
        .tau
        .iter()
        .enumerate()
        .map(|(i, t)| match t {
            Some(n) => p.at(*n, i),
            None => f.values[i],
        })
        .collect();
    Ok(f.with_values(values))
}

/// Both sides of the Calderon-Zygmund bounds for a stopping time built from
/// `g` at threshold `lambda`.
#[derive(Clone, Debug, PartialEq)]
pub struct CzBounds {
    /// `sup g|_tau I_{tau < inf}`.
    pub stopped_sup: f64,
    /// `N_0 lambda`.
    pub stopped_cap: f64,
    /// `|{tau < inf}|`.
    pub stopped_measure: f64,
    /// `lambda^{-1} int g I_{tau < inf}`.
    pub measure_cap: f64,
}

impl CzBounds {
    pub fn compute(g: &DiscreteField, tau: &StoppingTime, lambda: f64) -> Result<Self> {
        let gt = stopped_value(g, tau)?;
        let stopped_sup = (0..g.len())
            .filter(|&i| tau.is_finite(i))
            .map(|i| gt.values[i])
            .fold(0.0, f64::max);
        Ok(Self {
            stopped_sup,
            stopped_cap: g.filtration.n0() * lambda,
            stopped_measure: tau.finite_measure(),
            measure_cap: g.integral_where(|i| tau.is_finite(i)) / lambda,
        })
    }

    pub fn holds(&self, rel: f64) -> bool {
        self.stopped_sup <= self.stopped_cap * (1.0 + rel)
            && self.stopped_measure <= self.measure_cap * (1.0 + rel)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn line(n_min: i32, n_max: i32, hi: f64) -> Arc<Filtration> {
        build_filtration(FiltrationSpec::full(1, n_min, n_max, vec![[0.0, hi]])).unwrap()
    }

    #[test]
    fn dyadic_interval_levels() {
        let f = line(-2, 0, 4.0);
        assert_eq!(f.levels().count(), 3);
        assert_eq!(f.cell_volume(-2), 4.0);
        assert_eq!(f.cell_volume(-1), 2.0);
        assert_eq!(f.cell_volume(0), 1.0);
        assert_eq!(f.cell_count(-2), 1);
        assert_eq!(f.n0(), 2.0);
    }

    #[test]
    fn regularity_constants() {
        let par = FiltrationSpec::parabolic(1, 0, 2, vec![[0.0, 1.0], [0.0, 1.0]]);
        assert_eq!(par.k, vec![2, 1]);
        assert_eq!(build_filtration(par).unwrap().n0(), 8.0);
        let sq = FiltrationSpec::full(2, 0, 1, vec![[0.0, 1.0], [0.0, 1.0]]);
        assert_eq!(build_filtration(sq).unwrap().n0(), 4.0);
    }

    #[test]
    fn parabolic_cell_sides() {
        let f = build_filtration(FiltrationSpec::parabolic(1, 0, 2, vec![[0.0, 1.0], [-1.0, 1.0]]))
            .unwrap();
        assert_eq!(f.spec().side(2, 0), 1.0 / 16.0);
        assert_eq!(f.spec().side(2, 1), 1.0 / 4.0);
        assert_eq!(f.finest_shape(), &[16, 8]);
    }

    #[test]
    fn incommensurate_box_is_rejected() {
        let spec = FiltrationSpec::full(1, -2, 0, vec![[0.0, 3.0]]);
        let err = Filtration::new(spec).unwrap_err();
        assert!(err.to_string().contains("coarsest side"), "{err}");
        let spec = FiltrationSpec::full(1, 0, 2, vec![[0.5, 1.5]]);
        assert!(Filtration::new(spec).is_err());
        let spec = FiltrationSpec::half(1, 0, 2, vec![[-1.0, 1.0]]);
        assert!(Filtration::new(spec).is_err());
        let spec = FiltrationSpec::full(1, 2, 0, vec![[0.0, 1.0]]);
        assert!(Filtration::new(spec).is_err());
    }

    #[test]
    fn levels_partition_and_nest() {
        let f = build_filtration(FiltrationSpec::parabolic(1, -1, 1, vec![[0.0, 16.0], [-4.0, 4.0]]))
            .unwrap();
        for level in f.levels() {
            let total: f64 = f.cells(level).map(|c| c.volume).sum();
            assert!((total - f.box_volume()).abs() < 1e-12);
            for cell in f.cells(level) {
                let kids = f.children(&cell);
                if level < f.n_max() {
                    assert_eq!(kids.len() as f64, f.n0());
                    for k in &kids {
                        assert_eq!(f.parent(k).unwrap(), cell);
                        assert_eq!(cell.volume / k.volume, f.n0());
                    }
                } else {
                    assert!(kids.is_empty());
                }
            }
        }
    }

    #[test]
    fn indicator_average() {
        let f = line(-2, 0, 4.0);
        let ind = DiscreteField::new(f, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let avg = conditional_average(&ind, -1).unwrap();
        assert_eq!(avg.values(), &[0.5, 0.5, 0.0, 0.0]);
        assert!(conditional_average(&ind, 1).is_err());
    }

    #[test]
    fn projection_and_mean() {
        let f = line(-3, 0, 8.0);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let vals: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mean = vals.iter().sum::<f64>() / 8.0;
        let u = DiscreteField::new(f, vals).unwrap();
        let top = conditional_average(&u, -3).unwrap();
        for v in top.values() {
            assert!((v - mean).abs() < 1e-15);
        }
        let a = conditional_average(&u, -1).unwrap();
        let b = conditional_average(&a, -1).unwrap();
        assert_eq!(a.values(), b.values());
        assert!((a.integral() - u.integral()).abs() < 1e-14);
    }

    #[test]
    fn cz_worked_example() {
        let f = line(-2, 0, 4.0);
        let g = DiscreteField::new(f, vec![4.0, 0.0, 0.0, 0.0]).unwrap();
        let tau = cz_stopping_time(&g, 1.0).unwrap();
        assert_eq!(tau.values(), &[Some(-1), Some(-1), None, None]);
        let b = CzBounds::compute(&g, &tau, 1.0).unwrap();
        assert_eq!(b.stopped_sup, 2.0);
        assert_eq!(b.stopped_cap, 2.0);
        assert_eq!(b.stopped_measure, 2.0);
        assert_eq!(b.measure_cap, 4.0);
        let gt = stopped_value(&g, &tau).unwrap();
        assert_eq!(gt.integral(), 4.0);
    }

    #[test]
    fn cz_threshold_above_all_averages() {
        let f = line(-2, 0, 4.0);
        let g = DiscreteField::new(f, vec![4.0, 1.0, 0.0, 3.0]).unwrap();
        let tau = cz_stopping_time(&g, 4.0).unwrap();
        assert!(tau.values().iter().all(|t| t.is_none()));
    }

    #[test]
    fn cz_rejects_bad_input() {
        let f = line(-2, 0, 4.0);
        let g = DiscreteField::new(f, vec![1.0, -1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(
            cz_stopping_time(&g, 1.0),
            Err(Error::NegativeValue { index: 1, .. })
        ));
        let g = g.abs();
        assert!(cz_stopping_time(&g, 0.0).is_err());
        assert!(cz_stopping_time(&g, -2.0).is_err());
    }

    #[test]
    fn stopping_time_alignment_is_enforced() {
        let f = line(-2, 0, 4.0);
        let bad = StoppingTime::new(Arc::clone(&f), vec![Some(-1), None, None, None]);
        assert!(bad.is_err());
        let good = StoppingTime::new(f, vec![Some(-1), Some(-1), Some(0), None]).unwrap();
        assert!(good.is_aligned());
    }

    #[test]
    fn finest_stopping_time_is_identity() {
        let f = line(-2, 1, 4.0);
        let u = DiscreteField::from_fn(Arc::clone(&f), |x| (3.0 * x[0]).sin()).unwrap();
        let tau = StoppingTime::constant(f, Some(1)).unwrap();
        assert_eq!(stopped_value(&u, &tau).unwrap().values(), u.values());
    }

    #[test]
    fn mismatched_filtrations_are_rejected() {
        let a = DiscreteField::zeros(line(-2, 0, 4.0));
        let tau = StoppingTime::constant(line(-2, 1, 4.0), None).unwrap();
        assert!(matches!(stopped_value(&a, &tau), Err(Error::DomainMismatch)));
    }

    #[test]
    fn csv_and_raw_round_trip() {
        let f = build_filtration(FiltrationSpec::full(2, 0, 2, vec![[0.0, 1.0], [0.0, 2.0]])).unwrap();
        let u = DiscreteField::from_fn(Arc::clone(&f), |x| x[0] * 10.0 + x[1].powi(3)).unwrap();
        let mut buf = Vec::new();
        u.write_csv(&mut buf).unwrap();
        let back = DiscreteField::read_csv(Arc::clone(&f), buf.as_slice()).unwrap();
        assert_eq!(back.values(), u.values());
        let mut raw = Vec::new();
        u.write_raw(&mut raw).unwrap();
        assert_eq!(raw.len(), 8 * u.len());
        let back = DiscreteField::read_raw(f, raw.as_slice()).unwrap();
        assert_eq!(back.values(), u.values());
    }

    #[test]
    fn spec_parses_from_key_value_block() {
        let text = r#"
            geometry = "parabolic"
            d = 1
            k = [2, 1]
            n_min = -1
            n_max = 2
            box = [[0.0, 16.0], [-2.0, 2.0]]
        "#;
        let spec: FiltrationSpec = toml::from_str(text).unwrap();
        assert_eq!(spec, FiltrationSpec::parabolic(1, -1, 2, vec![[0.0, 16.0], [-2.0, 2.0]]));
        Filtration::new(spec).unwrap();
    }

    #[test]
    fn dilation_keeps_cell_structure() {
        let spec = FiltrationSpec::full(1, -1, 2, vec![[0.0, 2.0]]);
        let d = spec.dilated(1);
        assert_eq!(d.bounds, vec![[0.0, 1.0]]);
        let a = Filtration::new(spec).unwrap();
        let b = Filtration::new(d).unwrap();
        assert_eq!(a.finest_shape(), b.finest_shape());
    }
}
