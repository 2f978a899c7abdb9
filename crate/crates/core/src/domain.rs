//! Bounded Reinhardt domains through their radial profiles.
//!
//! A Reinhardt domain is determined by the region of moduli vectors
//! `Omega+ = {(|z_1|,...,|z_n|)}`, so only that region is stored: a
//! membership predicate on the nonnegative orthant plus a bounding box.
//! All moment integrals live on `Omega+` or on its coordinatewise square
//! `Omega~+`, both of which stay in this representation.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use thiserror::Error;

/// Margin applied by [`DomainProfile::rescale_into_unit_box`]: scales are
/// `bounding_radius * (1 + 2^-10)`, keeping the image strictly inside
/// `[0,1)^n`.
pub const RESCALE_MARGIN: f64 = 0.0009765625; // 2^-10

#[derive(Debug, Error)]
pub enum DomainError {
    #[error("unbounded profile: bounding radius must be finite and positive, got {0}")]
    Unbounded(f64),
    #[error("bad domain spec: {0}")]
    Spec(String),
    #[error("dimension mismatch: spec has dimension {spec}, context wants {want}")]
    DimensionMismatch { spec: usize, want: usize },
    #[error("table domain: {0}")]
    BadTable(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("table csv: {0}")]
    Csv(#[from] csv::Error),
}

/// Which family the profile belongs to; closed-form moment paths dispatch
/// on this.
#[derive(Clone, Debug, PartialEq)]
pub enum DomainKind {
    /// `|z_j| < rho_j` for each coordinate.
    Polydisk { radii: Vec<f64> },
    /// `sum |z_j|^2 < rho^2`.
    Ball { radius: f64 },
    /// `sum |z_j|^{p_j} < r`.
    Ellipsoid { exponents: Vec<f64>, radius: f64 },
    /// Predicate- or table-backed region.
    Generic,
}

type Indicator = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;

/// Radial profile of a bounded Reinhardt domain.
#[derive(Clone)]
pub struct DomainProfile {
    kind: DomainKind,
    indicator: Indicator,
    bounding_radius: Vec<f64>,
    contains_origin: bool,
    /// Per coordinate: does the closure of the region meet `{x_j = 0}`?
    axis_touching: Vec<bool>,
    /// Downward closed: `x` inside and `0 <= y <= x` implies `y` inside.
    /// Guaranteed for the built-in kinds, declared for generic profiles.
    monotone: bool,
    label: String,
}

impl fmt::Debug for DomainProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DomainProfile")
            .field("kind", &self.kind)
            .field("bounding_radius", &self.bounding_radius)
            .field("label", &self.label)
            .finish()
    }
}

impl DomainProfile {
    fn wrap_bounded(indicator: Indicator, bounds: Vec<f64>) -> Indicator {
        let b = bounds.clone();
        Arc::new(move |x: &[f64]| {
            if x.iter().zip(&b).any(|(v, r)| *v > *r || *v < 0.0) {
                return false;
            }
            indicator(x)
        })
    }

    /// Unit-box style polydisk `prod [0, rho_j)`.
    pub fn polydisk(radii: Vec<f64>) -> Self {
        assert!(!radii.is_empty() && radii.iter().all(|r| *r > 0.0));
        let r = radii.clone();
        let indicator: Indicator =
            Arc::new(move |x: &[f64]| x.iter().zip(&r).all(|(v, rj)| *v >= 0.0 && *v < *rj));
        let n = radii.len();
        let label = format!(
            "polydisk({})",
            radii
                .iter()
                .map(|r| format!("{r}"))
                .collect::<Vec<_>>()
                .join(",")
        );
        Self {
            kind: DomainKind::Polydisk {
                radii: radii.clone(),
            },
            indicator,
            bounding_radius: radii,
            contains_origin: true,
            axis_touching: vec![true; n],
            monotone: true,
            label,
        }
    }

    /// Euclidean ball of the given radius in `C^n`.
    pub fn ball(radius: f64, dim: usize) -> Self {
        assert!(radius > 0.0 && dim >= 1);
        let r2 = radius * radius;
        let indicator: Indicator = Arc::new(move |x: &[f64]| {
            x.iter().all(|v| *v >= 0.0) && x.iter().map(|v| v * v).sum::<f64>() < r2
        });
        Self {
            kind: DomainKind::Ball { radius },
            indicator,
            bounding_radius: vec![radius; dim],
            contains_origin: true,
            axis_touching: vec![true; dim],
            monotone: true,
            label: format!("ball({radius},n={dim})"),
        }
    }

    /// Region `sum |z_j|^{p_j} < r`.
    pub fn ellipsoid(exponents: Vec<f64>, radius: f64) -> Self {
        assert!(!exponents.is_empty() && exponents.iter().all(|p| *p > 0.0) && radius > 0.0);
        let p = exponents.clone();
        let r = radius;
        let indicator: Indicator = Arc::new(move |x: &[f64]| {
            x.iter().all(|v| *v >= 0.0)
                && x.iter().zip(&p).map(|(v, pj)| v.powf(*pj)).sum::<f64>() < r
        });
        let bounds: Vec<f64> = exponents.iter().map(|pj| radius.powf(1.0 / pj)).collect();
        let n = exponents.len();
        let label = format!(
            "ellipsoid(p=({}),r={radius})",
            exponents
                .iter()
                .map(|e| format!("{e}"))
                .collect::<Vec<_>>()
                .join(",")
        );
        Self {
            kind: DomainKind::Ellipsoid {
                exponents,
                radius,
            },
            indicator,
            bounding_radius: bounds,
            contains_origin: true,
            axis_touching: vec![true; n],
            monotone: true,
            label,
        }
    }

    /// Profile from an arbitrary membership predicate. The predicate is
    /// trusted to describe a Reinhardt-consistent region; only the bounding
    /// box is enforced. `monotone` declares downward closure (enables the
    /// boundary-resolving quadrature path).
    pub fn generic(
        indicator: impl Fn(&[f64]) -> bool + Send + Sync + 'static,
        bounding_radius: Vec<f64>,
        monotone: bool,
        label: impl Into<String>,
    ) -> Result<Self, DomainError> {
        for b in &bounding_radius {
            if !b.is_finite() || *b <= 0.0 {
                return Err(DomainError::Unbounded(*b));
            }
        }
        let n = bounding_radius.len();
        let raw: Indicator = Arc::new(indicator);
        let wrapped = Self::wrap_bounded(raw, bounding_radius.clone());
        let origin_probe = vec![1e-12; n];
        let contains_origin = wrapped(&origin_probe);
        let axis_touching = probe_axis_touching(&wrapped, &bounding_radius);
        Ok(Self {
            kind: DomainKind::Generic,
            indicator: wrapped,
            bounding_radius,
            contains_origin,
            axis_touching,
            monotone,
            label: label.into(),
        })
    }

    /// Gridded indicator from CSV rows `x_1,...,x_n,flag` on a regular grid
    /// with nearest-cell lookup.
    pub fn from_table(path: &Path, monotone: bool) -> Result<Self, DomainError> {
        let table = GridTable::load(path)?;
        let bounds = table.upper_bounds();
        let label = format!("table({})", path.display());
        let t = Arc::new(table);
        let t2 = Arc::clone(&t);
        Self::generic(move |x: &[f64]| t2.lookup(x), bounds, monotone, label)
    }

    pub fn kind(&self) -> &DomainKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.bounding_radius.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        assert_eq!(x.len(), self.dim());
        (self.indicator)(x)
    }

    pub fn indicator(&self) -> Indicator {
        Arc::clone(&self.indicator)
    }

    pub fn bounding_radius(&self) -> &[f64] {
        &self.bounding_radius
    }

    pub fn contains_origin(&self) -> bool {
        self.contains_origin
    }

    pub fn axis_touching(&self) -> &[bool] {
        &self.axis_touching
    }

    pub fn is_monotone(&self) -> bool {
        self.monotone
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// The squared-variable region: `t` is inside iff `sqrt(t)` is inside
    /// this profile. Bounding radii square.
    pub fn squared_region(&self) -> DomainProfile {
        let inner = Arc::clone(&self.indicator);
        let n = self.dim();
        let indicator: Indicator = Arc::new(move |t: &[f64]| {
            if t.iter().any(|v| *v < 0.0) {
                return false;
            }
            let mut r = vec![0.0; t.len()];
            for (rj, tj) in r.iter_mut().zip(t) {
                *rj = tj.sqrt();
            }
            inner(&r)
        });
        let bounds: Vec<f64> = self.bounding_radius.iter().map(|b| b * b).collect();
        DomainProfile {
            kind: DomainKind::Generic,
            indicator,
            bounding_radius: bounds,
            contains_origin: self.contains_origin,
            axis_touching: self.axis_touching.clone(),
            monotone: self.monotone,
            label: format!("squared({})", self.label),
        }
        .with_kind_for_square(self.kind.clone(), n)
    }

    fn with_kind_for_square(mut self, original: DomainKind, _n: usize) -> DomainProfile {
        // the square of a polydisk is still a polydisk-shaped box
        if let DomainKind::Polydisk { radii } = original {
            self.kind = DomainKind::Polydisk {
                radii: radii.iter().map(|r| r * r).collect(),
            };
        }
        self
    }

    /// Rescale into the unit box: returns the profile whose indicator at `x`
    /// is this profile's at `c * x` along with the per-coordinate scale
    /// `c_j = bounding_radius_j * (1 + 2^-10)`.
    ///
    /// Moment integrals transform by
    /// `int t^k dV(t) = (prod c_j^{k_j+1}) int x^k dV(x)`.
    pub fn rescale_into_unit_box(&self) -> Result<(DomainProfile, Vec<f64>), DomainError> {
        for b in &self.bounding_radius {
            if !b.is_finite() || *b <= 0.0 {
                return Err(DomainError::Unbounded(*b));
            }
        }
        let scale: Vec<f64> = self
            .bounding_radius
            .iter()
            .map(|b| b * (1.0 + RESCALE_MARGIN))
            .collect();
        let inner = Arc::clone(&self.indicator);
        let c = scale.clone();
        let indicator: Indicator = Arc::new(move |x: &[f64]| {
            let mut t = vec![0.0; x.len()];
            for ((tj, xj), cj) in t.iter_mut().zip(x).zip(&c) {
                *tj = xj * cj;
            }
            inner(&t)
        });
        let bounds = vec![1.0 / (1.0 + RESCALE_MARGIN); self.dim()];
        let kind = match &self.kind {
            DomainKind::Polydisk { radii } => DomainKind::Polydisk {
                radii: radii
                    .iter()
                    .zip(&scale)
                    .map(|(r, c)| r / c)
                    .collect(),
            },
            _ => DomainKind::Generic,
        };
        Ok((
            DomainProfile {
                kind,
                indicator,
                bounding_radius: bounds,
                contains_origin: self.contains_origin,
                axis_touching: self.axis_touching.clone(),
                monotone: self.monotone,
                label: format!("rescaled({})", self.label),
            },
            scale,
        ))
    }
}

fn probe_axis_touching(indicator: &Indicator, bounds: &[f64]) -> Vec<bool> {
    let n = bounds.len();
    let mut out = vec![false; n];
    let steps = 16usize;
    for j in 0..n {
        let mut touching = false;
        // scan a coarse grid of the slab x_j ~ 0
        let mut idx = vec![0usize; n];
        'grid: loop {
            let mut pt = vec![0.0; n];
            for l in 0..n {
                pt[l] = if l == j {
                    bounds[j] * 1e-9
                } else {
                    bounds[l] * (idx[l] as f64 + 0.5) / steps as f64
                };
            }
            if indicator(&pt) {
                touching = true;
                break 'grid;
            }
            let mut l = 0;
            loop {
                if l == n {
                    break 'grid;
                }
                if l == j {
                    l += 1;
                    continue;
                }
                idx[l] += 1;
                if idx[l] < steps {
                    break;
                }
                idx[l] = 0;
                l += 1;
            }
        }
        out[j] = touching;
    }
    out
}

/// Regular-grid 0/1 table with nearest-cell lookup.
struct GridTable {
    axes: Vec<Vec<f64>>,
    flags: Vec<bool>,
}

impl GridTable {
    fn load(path: &Path) -> Result<Self, DomainError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .flexible(false)
            .from_path(path)?;
        let mut rows: Vec<(Vec<f64>, bool)> = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| DomainError::BadTable(e.to_string()))?;
            if record.len() < 2 {
                return Err(DomainError::BadTable(
                    "need at least one coordinate column and a flag".into(),
                ));
            }
            let mut coords = Vec::with_capacity(record.len() - 1);
            for field in record.iter().take(record.len() - 1) {
                coords.push(field.parse::<f64>().map_err(|e| {
                    DomainError::BadTable(format!("bad coordinate '{field}': {e}"))
                })?);
            }
            let flag_field = record.get(record.len() - 1).unwrap();
            let flag = match flag_field {
                "0" => false,
                "1" => true,
                other => {
                    return Err(DomainError::BadTable(format!(
                        "flag must be 0 or 1, got '{other}'"
                    )))
                }
            };
            rows.push((coords, flag));
        }
        if rows.is_empty() {
            return Err(DomainError::BadTable("empty table".into()));
        }
        let n = rows[0].0.len();
        if rows.iter().any(|(c, _)| c.len() != n) {
            return Err(DomainError::BadTable("ragged rows".into()));
        }
        let mut axes: Vec<Vec<f64>> = vec![Vec::new(); n];
        for (coords, _) in &rows {
            for (axis, v) in axes.iter_mut().zip(coords) {
                if !axis.iter().any(|w| (w - v).abs() < 1e-12) {
                    axis.push(*v);
                }
            }
        }
        for axis in &mut axes {
            axis.sort_by(|a, b| a.partial_cmp(b).unwrap());
        }
        let sizes: Vec<usize> = axes.iter().map(|a| a.len()).collect();
        let total: usize = sizes.iter().product();
        if rows.len() != total {
            return Err(DomainError::BadTable(format!(
                "expected {total} rows for a full regular grid, got {}",
                rows.len()
            )));
        }
        let mut flags = vec![false; total];
        for (coords, flag) in &rows {
            let mut offset = 0usize;
            for (axis, v) in axes.iter().zip(coords) {
                let pos = axis
                    .iter()
                    .position(|w| (w - v).abs() < 1e-12)
                    .expect("grid value present");
                offset = offset * axis.len() + pos;
            }
            flags[offset] = *flag;
        }
        Ok(GridTable { axes, flags })
    }

    fn upper_bounds(&self) -> Vec<f64> {
        self.axes
            .iter()
            .map(|a| {
                let last = *a.last().unwrap();
                let step = if a.len() > 1 {
                    last - a[a.len() - 2]
                } else {
                    last.max(1e-6)
                };
                last + 0.5 * step
            })
            .collect()
    }

    fn lookup(&self, x: &[f64]) -> bool {
        let mut offset = 0usize;
        for (axis, v) in self.axes.iter().zip(x) {
            // nearest grid value
            let pos = match axis.binary_search_by(|w| w.partial_cmp(v).unwrap()) {
                Ok(p) => p,
                Err(0) => 0,
                Err(p) if p == axis.len() => axis.len() - 1,
                Err(p) => {
                    if (v - axis[p - 1]).abs() <= (axis[p] - v).abs() {
                        p - 1
                    } else {
                        p
                    }
                }
            };
            offset = offset * axis.len() + pos;
        }
        self.flags[offset]
    }
}

/// Parsed form of a CLI domain spec; built into a profile once the ambient
/// dimension is known.
#[derive(Clone, Debug, PartialEq)]
pub enum DomainSpec {
    Polydisk(Vec<f64>),
    Ball(f64),
    Ellipsoid { exponents: Vec<f64>, radius: f64 },
    Table(String),
}

impl DomainSpec {
    /// Grammar: `polydisk(1,1)`, `ball(1)`, `ellipsoid(p=(2,4), r=1)`,
    /// `table(file.csv)`.
    pub fn parse(s: &str) -> Result<Self, DomainError> {
        let s = s.trim();
        let (name, args) = split_call(s).ok_or_else(|| {
            DomainError::Spec(format!(
                "expected kind(args), e.g. polydisk(1,1) or ball(1); got '{s}'"
            ))
        })?;
        match name {
            "polydisk" => {
                let radii = parse_floats(args)?;
                if radii.is_empty() || radii.iter().any(|r| *r <= 0.0) {
                    return Err(DomainError::Spec("polydisk radii must be positive".into()));
                }
                Ok(DomainSpec::Polydisk(radii))
            }
            "ball" => {
                let radii = parse_floats(args)?;
                if radii.len() != 1 || radii[0] <= 0.0 {
                    return Err(DomainError::Spec(
                        "ball takes a single positive radius".into(),
                    ));
                }
                Ok(DomainSpec::Ball(radii[0]))
            }
            "ellipsoid" => {
                let mut exponents = None;
                let mut radius = None;
                for part in split_top_level(args) {
                    let (key, value) = part.split_once('=').ok_or_else(|| {
                        DomainError::Spec("ellipsoid wants p=(...) and r=...".into())
                    })?;
                    match key.trim() {
                        "p" => {
                            let inner = value
                                .trim()
                                .strip_prefix('(')
                                .and_then(|v| v.strip_suffix(')'))
                                .ok_or_else(|| {
                                    DomainError::Spec("ellipsoid p wants (p1,...,pn)".into())
                                })?;
                            exponents = Some(parse_floats(inner)?);
                        }
                        "r" => {
                            radius = Some(value.trim().parse::<f64>().map_err(|e| {
                                DomainError::Spec(format!("bad ellipsoid radius: {e}"))
                            })?);
                        }
                        other => {
                            return Err(DomainError::Spec(format!(
                                "unknown ellipsoid key '{other}'"
                            )))
                        }
                    }
                }
                let exponents =
                    exponents.ok_or_else(|| DomainError::Spec("ellipsoid needs p=(...)".into()))?;
                let radius =
                    radius.ok_or_else(|| DomainError::Spec("ellipsoid needs r=...".into()))?;
                if exponents.iter().any(|p| *p <= 0.0) || radius <= 0.0 {
                    return Err(DomainError::Spec(
                        "ellipsoid exponents and radius must be positive".into(),
                    ));
                }
                Ok(DomainSpec::Ellipsoid { exponents, radius })
            }
            "table" => Ok(DomainSpec::Table(args.trim().to_string())),
            other => Err(DomainError::Spec(format!(
                "unknown domain kind '{other}' (expected polydisk, ball, ellipsoid, table)"
            ))),
        }
    }

    /// Build the profile; `dim` comes from the surrounding context (lattice
    /// bound or alpha-max).
    pub fn build(&self, dim: usize, base_dir: Option<&Path>) -> Result<DomainProfile, DomainError> {
        match self {
            DomainSpec::Polydisk(radii) => {
                if radii.len() != dim {
                    return Err(DomainError::DimensionMismatch {
                        spec: radii.len(),
                        want: dim,
                    });
                }
                Ok(DomainProfile::polydisk(radii.clone()))
            }
            DomainSpec::Ball(r) => Ok(DomainProfile::ball(*r, dim)),
            DomainSpec::Ellipsoid { exponents, radius } => {
                if exponents.len() != dim {
                    return Err(DomainError::DimensionMismatch {
                        spec: exponents.len(),
                        want: dim,
                    });
                }
                Ok(DomainProfile::ellipsoid(exponents.clone(), *radius))
            }
            DomainSpec::Table(file) => {
                let path = match base_dir {
                    Some(dir) => dir.join(file),
                    None => Path::new(file).to_path_buf(),
                };
                let profile = DomainProfile::from_table(&path, false)?;
                if profile.dim() != dim {
                    return Err(DomainError::DimensionMismatch {
                        spec: profile.dim(),
                        want: dim,
                    });
                }
                Ok(profile)
            }
        }
    }
}

fn split_call(s: &str) -> Option<(&str, &str)> {
    let open = s.find('(')?;
    if !s.ends_with(')') {
        return None;
    }
    Some((s[..open].trim(), &s[open + 1..s.len() - 1]))
}

fn parse_floats(s: &str) -> Result<Vec<f64>, DomainError> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|e| DomainError::Spec(format!("bad number '{}': {e}", p.trim())))
        })
        .collect()
}

/// Split on top-level commas (not inside parentheses).
fn split_top_level(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0usize;
    let mut start = 0usize;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth = depth.saturating_sub(1),
            ',' if depth == 0 => {
                out.push(s[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    if start < s.len() {
        out.push(s[start..].trim());
    }
    out
}
