//! Stratified selection of labeled training/testing pixels.
//!
//! Pixels are grouped into five context categories (interior, near-edge
//! inside, border, near-edge outside, near frame edge). A draw is balanced
//! 50/50 over the two classes, spread as evenly as possible over categories
//! and source images, then split 70/30 into train and test.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::context::extract_window;
use crate::error::{Error, Result};
use crate::image::{GroundTruthMask, Label, RasterImage};

/// Context category of a sampled pixel. Overlaps are resolved by the fixed
/// precedence frame > border > near-edge > interior.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SampleCategory {
    Interior,
    NearEdgeInside,
    Border,
    NearEdgeOutside,
    NearFrameEdge,
}

/// Quota and backfill order: interior first, so deficits elsewhere are
/// absorbed by interior pixels.
pub const CATEGORY_ORDER: [SampleCategory; 5] = [
    SampleCategory::Interior,
    SampleCategory::NearEdgeInside,
    SampleCategory::Border,
    SampleCategory::NearEdgeOutside,
    SampleCategory::NearFrameEdge,
];

impl SampleCategory {
    pub fn as_str(self) -> &'static str {
        match self {
            SampleCategory::Interior => "INTERIOR",
            SampleCategory::NearEdgeInside => "NEAR_EDGE_INSIDE",
            SampleCategory::Border => "BORDER",
            SampleCategory::NearEdgeOutside => "NEAR_EDGE_OUTSIDE",
            SampleCategory::NearFrameEdge => "NEAR_FRAME_EDGE",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        CATEGORY_ORDER
            .iter()
            .copied()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown sample category {s:?}")))
    }

    fn index(self) -> usize {
        CATEGORY_ORDER.iter().position(|&c| c == self).unwrap()
    }
}

impl std::fmt::Display for SampleCategory {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One labeled context window.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub features: Vec<f64>,
    pub label: Label,
    pub category: SampleCategory,
    pub source: String,
    pub coord: (usize, usize),
}

/// Train/test sample sets plus the seed that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub train: Vec<LabeledSample>,
    pub test: Vec<LabeledSample>,
    pub seed: u64,
}

/// An image, its ground truth, and an identifier used in dataset files.
#[derive(Debug, Clone)]
pub struct SourceImage {
    pub image: RasterImage,
    pub mask: GroundTruthMask,
    pub id: String,
}

/// Categorizes one pixel. `band` is the near-edge distance in pixels;
/// distances are Chebyshev.
pub fn categorize_pixel(
    mask: &GroundTruthMask,
    coord: (usize, usize),
    band: usize,
) -> Result<SampleCategory> {
    let (x, y) = coord;
    if x >= mask.width() || y >= mask.height() {
        return Err(Error::invalid(format!(
            "coordinate ({x}, {y}) is outside a {}x{} mask",
            mask.width(),
            mask.height()
        )));
    }
    if band < 1 {
        return Err(Error::invalid("band must be at least 1"));
    }

    let frame_dist = x
        .min(y)
        .min(mask.width() - 1 - x)
        .min(mask.height() - 1 - y);
    if frame_dist < band {
        return Ok(SampleCategory::NearFrameEdge);
    }

    match nearest_opposite_within(mask, coord, band) {
        Some(1) => Ok(SampleCategory::Border),
        Some(_) => Ok(match mask.label_at(x, y) {
            Label::Object => SampleCategory::NearEdgeInside,
            Label::Background => SampleCategory::NearEdgeOutside,
        }),
        None => Ok(SampleCategory::Interior),
    }
}

/// Chebyshev distance to the nearest opposite-label pixel, if within `band`.
/// Scans rings of growing radius so the first hit is the minimum.
fn nearest_opposite_within(
    mask: &GroundTruthMask,
    (x, y): (usize, usize),
    band: usize,
) -> Option<usize> {
    let label = mask.label_at(x, y);
    let (w, h) = (mask.width() as isize, mask.height() as isize);
    let (cx, cy) = (x as isize, y as isize);
    for r in 1..=band as isize {
        let mut hit = false;
        let mut probe = |px: isize, py: isize| {
            if px >= 0
                && py >= 0
                && px < w
                && py < h
                && mask.label_at(px as usize, py as usize) != label
            {
                hit = true;
            }
        };
        for dx in -r..=r {
            probe(cx + dx, cy - r);
            probe(cx + dx, cy + r);
        }
        for dy in (-r + 1)..r {
            probe(cx - r, cy + dy);
            probe(cx + r, cy + dy);
        }
        if hit {
            return Some(r as usize);
        }
    }
    None
}

/// Draws `total` labeled windows balanced over classes, stratified over
/// categories and source images, and splits them 70/30.
pub fn sample_dataset(
    sources: &[SourceImage],
    window: usize,
    total: usize,
    band: usize,
    seed: u64,
) -> Result<Dataset> {
    if sources.is_empty() {
        return Err(Error::invalid("at least one source image is required"));
    }
    if total < 10 {
        return Err(Error::invalid(format!("total {total} must be at least 10")));
    }
    if band < 1 {
        return Err(Error::invalid("band must be at least 1"));
    }
    if window.is_multiple_of(2) || window < 3 {
        return Err(Error::invalid(format!(
            "window size {window} must be odd and at least 3"
        )));
    }
    let channels = sources[0].image.channels();
    for src in sources {
        if src.image.channels() != channels {
            return Err(Error::invalid(
                "all source images must have the same channel count",
            ));
        }
        if src.image.width() != src.mask.width() || src.image.height() != src.mask.height() {
            return Err(Error::invalid(format!(
                "mask dimensions do not match image {:?}",
                src.id
            )));
        }
        if src.id.contains(',') || src.id.contains('\n') {
            return Err(Error::invalid(format!(
                "source id {:?} may not contain commas or newlines",
                src.id
            )));
        }
    }
    for (i, a) in sources.iter().enumerate() {
        if sources[..i].iter().any(|b| b.id == a.id) {
            return Err(Error::invalid(format!("duplicate source id {:?}", a.id)));
        }
    }

    // cells[class][category][image] -> candidate coordinates in scan order
    let mut cells: [CategoryCells; 2] = [make_cells(sources.len()), make_cells(sources.len())];
    for (img_idx, src) in sources.iter().enumerate() {
        for y in 0..src.mask.height() {
            for x in 0..src.mask.width() {
                let cat = categorize_pixel(&src.mask, (x, y), band)?;
                let class = class_index(src.mask.label_at(x, y));
                cells[class][cat.index()][img_idx].push((x, y));
            }
        }
    }

    let n_obj = total - total / 2;
    let n_bg = total / 2;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for class_cells in cells.iter_mut() {
        for cat_cells in class_cells.iter_mut() {
            for cell in cat_cells.iter_mut() {
                cell.shuffle(&mut rng);
            }
        }
    }

    let obj_picks = draw_class(&cells[class_index(Label::Object)], n_obj, Label::Object)?;
    let bg_picks = draw_class(
        &cells[class_index(Label::Background)],
        n_bg,
        Label::Background,
    )?;

    let mut obj_samples = materialize(sources, window, Label::Object, obj_picks)?;
    let mut bg_samples = materialize(sources, window, Label::Background, bg_picks)?;
    obj_samples.shuffle(&mut rng);
    bg_samples.shuffle(&mut rng);

    let train_total = (total * 7 + 5) / 10;
    let mut train_obj = train_total.div_ceil(2).min(n_obj);
    let mut train_bg = train_total - train_obj;
    if train_bg > n_bg {
        train_obj += train_bg - n_bg;
        train_bg = n_bg;
    }

    let test_obj = obj_samples.split_off(train_obj);
    let test_bg = bg_samples.split_off(train_bg);
    let mut train = obj_samples;
    train.extend(bg_samples);
    let mut test = test_obj;
    test.extend(test_bg);
    train.shuffle(&mut rng);
    test.shuffle(&mut rng);

    Ok(Dataset { train, test, seed })
}

/// Candidate coordinates indexed by [category][image].
type CategoryCells = Vec<Vec<Vec<(usize, usize)>>>;

fn make_cells(n_images: usize) -> CategoryCells {
    vec![vec![Vec::new(); n_images]; CATEGORY_ORDER.len()]
}

fn class_index(label: Label) -> usize {
    match label {
        Label::Object => 0,
        Label::Background => 1,
    }
}

/// Picks `n` candidates for one class: even per-category quotas, deficits
/// backfilled starting from interior, round-robin over source images.
fn draw_class(
    cat_cells: &CategoryCells,
    n: usize,
    label: Label,
) -> Result<Vec<(usize, usize, usize, SampleCategory)>> {
    let avail: Vec<usize> = cat_cells
        .iter()
        .map(|imgs| imgs.iter().map(Vec::len).sum())
        .collect();
    let total_avail: usize = avail.iter().sum();
    if total_avail == 0 {
        return Err(Error::MissingLabel(label));
    }
    if n > total_avail {
        return Err(Error::Capacity {
            label,
            requested: n,
            available: total_avail,
        });
    }

    let base = n / CATEGORY_ORDER.len();
    let rem = n % CATEGORY_ORDER.len();
    let mut take: Vec<usize> = (0..CATEGORY_ORDER.len())
        .map(|i| (base + usize::from(i < rem)).min(avail[i]))
        .collect();
    let mut deficit = n - take.iter().sum::<usize>();
    for i in 0..CATEGORY_ORDER.len() {
        let extra = deficit.min(avail[i] - take[i]);
        take[i] += extra;
        deficit -= extra;
    }
    debug_assert_eq!(deficit, 0);

    let mut picks = Vec::with_capacity(n);
    for (cat_i, &count) in take.iter().enumerate() {
        let imgs = &cat_cells[cat_i];
        let mut cursor = vec![0usize; imgs.len()];
        let mut remaining = count;
        while remaining > 0 {
            for (img_idx, cell) in imgs.iter().enumerate() {
                if remaining == 0 {
                    break;
                }
                if cursor[img_idx] < cell.len() {
                    let (x, y) = cell[cursor[img_idx]];
                    cursor[img_idx] += 1;
                    remaining -= 1;
                    picks.push((img_idx, x, y, CATEGORY_ORDER[cat_i]));
                }
            }
        }
    }
    Ok(picks)
}

fn materialize(
    sources: &[SourceImage],
    window: usize,
    label: Label,
    picks: Vec<(usize, usize, usize, SampleCategory)>,
) -> Result<Vec<LabeledSample>> {
    picks
        .into_iter()
        .map(|(img_idx, x, y, category)| {
            let src = &sources[img_idx];
            let cw = extract_window(&src.image, (x, y), window)?;
            Ok(LabeledSample {
                features: cw.features,
                label,
                category,
                source: src.id.clone(),
                coord: (x, y),
            })
        })
        .collect()
}

impl Dataset {
    pub fn feature_width(&self) -> usize {
        self.train
            .first()
            .or_else(|| self.test.first())
            .map_or(0, |s| s.features.len())
    }

    pub fn all_samples(&self) -> impl Iterator<Item = &LabeledSample> {
        self.train.iter().chain(self.test.iter())
    }

    /// Writes the dataset as a text table, train rows first then test rows.
    /// Features carry 9 significant digits.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let width = self.feature_width();
        let mut out = String::new();
        out.push_str("label,category,source,x,y");
        for i in 1..=width {
            out.push_str(&format!(",f{i}"));
        }
        out.push('\n');
        for sample in self.all_samples() {
            out.push_str(&format!(
                "{},{},{},{},{}",
                sample.label, sample.category, sample.source, sample.coord.0, sample.coord.1
            ));
            for f in &sample.features {
                out.push_str(&format!(",{f:.8e}"));
            }
            out.push('\n');
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    /// Reads a dataset table written by [`Dataset::save`]. The train/test
    /// boundary is recomputed from the row count via the 70/30 rule; the
    /// seed of a loaded dataset is unknown and reported as 0.
    pub fn load(path: impl AsRef<Path>) -> Result<Dataset> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::format(Some(path.into()), "empty dataset file"))?;
        let cols: Vec<&str> = header.split(',').collect();
        if cols.len() < 6 || cols[..5] != ["label", "category", "source", "x", "y"] {
            return Err(Error::format(
                Some(path.into()),
                format!("unexpected header {header:?}"),
            ));
        }
        let width = cols.len() - 5;

        let mut samples = Vec::new();
        for (lineno, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != width + 5 {
                return Err(Error::format(
                    Some(path.into()),
                    format!(
                        "row {}: expected {} fields, found {}",
                        lineno + 2,
                        width + 5,
                        fields.len()
                    ),
                ));
            }
            let parse_coord = |s: &str, name: &str| {
                s.parse::<usize>().map_err(|_| {
                    Error::format(
                        Some(path.into()),
                        format!("row {}: bad {name} {s:?}", lineno + 2),
                    )
                })
            };
            let mut features = Vec::with_capacity(width);
            for s in &fields[5..] {
                features.push(s.parse::<f64>().map_err(|_| {
                    Error::format(
                        Some(path.into()),
                        format!("row {}: bad feature {s:?}", lineno + 2),
                    )
                })?);
            }
            samples.push(LabeledSample {
                label: Label::parse(fields[0])?,
                category: SampleCategory::parse(fields[1])?,
                source: fields[2].to_string(),
                coord: (parse_coord(fields[3], "x")?, parse_coord(fields[4], "y")?),
                features,
            });
        }

        let train_total = (samples.len() * 7 + 5) / 10;
        let test = samples.split_off(train_total);
        Ok(Dataset {
            train: samples,
            test,
            seed: 0,
        })
    }
}
