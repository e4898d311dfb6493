//! Per-part color descriptors: HSV histograms and color bag-of-words.
//!
//! Every emitted descriptor is nonnegative and sums to 1 within
//! [`DESCRIPTOR_SUM_TOLERANCE`].

mod codebook;

pub use codebook::{fingerprint, Codebook, CODEBOOK_FILE_VERSION};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DESCRIPTOR_SUM_TOLERANCE: f64 = 1e-6;

/// Fixed patch size for bag-of-words sampling.
pub const PATCH_SIZE: (usize, usize) = (15, 15);

/// Patches sampled per region when building a bag-of-words descriptor.
pub const BOW_PATCH_COUNT: usize = 200;

/// Nonnegative vector summing to 1: the feature representation of one part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct PartDescriptor {
    values: Vec<f64>,
}

impl PartDescriptor {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidDescriptor("empty descriptor".into()));
        }
        let mut sum = 0.0;
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidDescriptor(format!(
                    "entry {i} is {v}, expected a nonnegative finite value"
                )));
            }
            sum += v;
        }
        if (sum - 1.0).abs() > DESCRIPTOR_SUM_TOLERANCE {
            return Err(Error::InvalidDescriptor(format!(
                "entries sum to {sum}, expected 1"
            )));
        }
        Ok(PartDescriptor { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl TryFrom<Vec<f64>> for PartDescriptor {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        PartDescriptor::new(values)
    }
}

impl From<PartDescriptor> for Vec<f64> {
    fn from(d: PartDescriptor) -> Self {
        d.values
    }
}

impl AsRef<[f64]> for PartDescriptor {
    fn as_ref(&self) -> &[f64] {
        &self.values
    }
}

/// All part descriptors of one image, with hidden parts left as `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolisticDescriptor {
    parts: Vec<Option<PartDescriptor>>,
}

impl HolisticDescriptor {
    pub fn new(parts: Vec<Option<PartDescriptor>>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::InvalidDescriptor("no parts".into()));
        }
        Ok(HolisticDescriptor { parts })
    }

    pub fn parts(&self) -> &[Option<PartDescriptor>] {
        &self.parts
    }

    pub fn part(&self, j: usize) -> Option<&PartDescriptor> {
        self.parts.get(j).and_then(|p| p.as_ref())
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn visible_mask(&self) -> Vec<bool> {
        self.parts.iter().map(|p| p.is_some()).collect()
    }

    pub fn visible_indices(&self) -> Vec<usize> {
        (0..self.parts.len()).filter(|&j| self.parts[j].is_some()).collect()
    }

    pub fn hidden_indices(&self) -> Vec<usize> {
        (0..self.parts.len()).filter(|&j| self.parts[j].is_none()).collect()
    }

    /// Index of the single hidden part; errors when zero or several parts are
    /// hidden.
    pub fn single_hidden(&self) -> Result<usize> {
        let hidden = self.hidden_indices();
        match hidden.as_slice() {
            [m] => Ok(*m),
            [] => Err(Error::InvalidQuery("no hidden part in query".into())),
            _ => Err(Error::InvalidQuery(format!(
                "{} hidden parts in query, expected exactly one",
                hidden.len()
            ))),
        }
    }
}

/// One pixel in HSV space: hue in degrees `[0, 360)`, saturation and value in
/// `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hsv {
    pub h: f64,
    pub s: f64,
    pub v: f64,
}

/// Standard RGB-to-HSV conversion from 8-bit channels.
pub fn rgb_to_hsv(r: u8, g: u8, b: u8) -> Hsv {
    let r = r as f64 / 255.0;
    let g = g as f64 / 255.0;
    let b = b as f64 / 255.0;
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;

    let h = if delta == 0.0 {
        0.0
    } else if max == r {
        let mut h = 60.0 * ((g - b) / delta);
        if h < 0.0 {
            h += 360.0;
        }
        h
    } else if max == g {
        60.0 * ((b - r) / delta + 2.0)
    } else {
        60.0 * ((r - g) / delta + 4.0)
    };
    let s = if max == 0.0 { 0.0 } else { delta / max };
    Hsv { h: h % 360.0, s, v: max }
}

/// A row-major rectangle of HSV pixels, typically a cropped part box.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    width: usize,
    height: usize,
    pixels: Vec<Hsv>,
}

impl Region {
    pub fn new(width: usize, height: usize, pixels: Vec<Hsv>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::InvalidParameter(format!(
                "region {width}x{height} needs {} pixels, got {}",
                width * height,
                pixels.len()
            )));
        }
        Ok(Region { width, height, pixels })
    }

    /// Build a region from packed 8-bit RGB data (3 bytes per pixel).
    pub fn from_rgb8(width: usize, height: usize, data: &[u8]) -> Result<Self> {
        if data.len() != width * height * 3 {
            return Err(Error::InvalidParameter(format!(
                "rgb buffer for {width}x{height} needs {} bytes, got {}",
                width * height * 3,
                data.len()
            )));
        }
        let pixels = data
            .chunks_exact(3)
            .map(|px| rgb_to_hsv(px[0], px[1], px[2]))
            .collect();
        Ok(Region { width, height, pixels })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[Hsv] {
        &self.pixels
    }

    pub fn crop(&self, x: usize, y: usize, w: usize, h: usize) -> Result<Region> {
        if x + w > self.width || y + h > self.height || w == 0 || h == 0 {
            return Err(Error::InvalidParameter(format!(
                "crop {w}x{h}+{x}+{y} exceeds region {}x{}",
                self.width, self.height
            )));
        }
        let mut pixels = Vec::with_capacity(w * h);
        for row in y..y + h {
            let start = row * self.width + x;
            pixels.extend_from_slice(&self.pixels[start..start + w]);
        }
        Ok(Region { width: w, height: h, pixels })
    }
}

/// Bin counts for the HSV histogram layout. The default matches the 40-dim
/// descriptor: 24 hue, 8 saturation, 8 value bins, all uniformly spaced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HsvLayout {
    pub hue_bins: usize,
    pub sat_bins: usize,
    pub val_bins: usize,
}

impl Default for HsvLayout {
    fn default() -> Self {
        HsvLayout { hue_bins: 24, sat_bins: 8, val_bins: 8 }
    }
}

impl HsvLayout {
    pub fn dims(&self) -> usize {
        self.hue_bins + self.sat_bins + self.val_bins
    }

    pub fn hue_range(&self) -> std::ops::Range<usize> {
        0..self.hue_bins
    }

    pub fn sat_range(&self) -> std::ops::Range<usize> {
        self.hue_bins..self.hue_bins + self.sat_bins
    }

    pub fn val_range(&self) -> std::ops::Range<usize> {
        self.hue_bins + self.sat_bins..self.dims()
    }

    fn hue_bin(&self, h: f64) -> usize {
        let bin = (h / 360.0 * self.hue_bins as f64).floor() as isize;
        bin.clamp(0, self.hue_bins as isize - 1) as usize
    }

    fn unit_bin(&self, x: f64, bins: usize) -> usize {
        // Uniform bins on [0, 1], right-exclusive except the last.
        let bin = (x * bins as f64).floor() as isize;
        bin.clamp(0, bins as isize - 1) as usize
    }
}

/// Per-channel HSV histograms, each normalized to sum 1, concatenated and
/// scaled by 1/3 so the full vector sums to 1.
pub fn hsv_histogram(region: &Region, layout: HsvLayout) -> Result<PartDescriptor> {
    if region.pixels.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let mut hist = vec![0.0; layout.dims()];
    for px in &region.pixels {
        hist[layout.hue_bin(px.h)] += 1.0;
        hist[layout.hue_bins + layout.unit_bin(px.s, layout.sat_bins)] += 1.0;
        hist[layout.hue_bins + layout.sat_bins + layout.unit_bin(px.v, layout.val_bins)] += 1.0;
    }
    let scale = 1.0 / (3.0 * region.pixels.len() as f64);
    for v in hist.iter_mut() {
        *v *= scale;
    }
    PartDescriptor::new(hist)
}

/// Top-left corners of `count` random patches fully inside a
/// `region_width x region_height` rectangle. Deterministic per seed.
pub fn sample_patch_origins(
    region_width: usize,
    region_height: usize,
    patch: (usize, usize),
    count: usize,
    seed: u64,
) -> Result<Vec<(usize, usize)>> {
    let (pw, ph) = patch;
    if pw == 0 || ph == 0 {
        return Err(Error::InvalidParameter("patch size must be positive".into()));
    }
    if region_width < pw || region_height < ph {
        return Err(Error::RegionTooSmall {
            width: region_width,
            height: region_height,
            patch_width: pw,
            patch_height: ph,
        });
    }
    let mut rng = StdRng::seed_from_u64(seed);
    let max_x = region_width - pw;
    let max_y = region_height - ph;
    Ok((0..count)
        .map(|_| (rng.random_range(0..=max_x), rng.random_range(0..=max_y)))
        .collect())
}

/// Sample `count` patches and reduce each to its mean HSV triple.
pub fn sample_patches(
    region: &Region,
    patch: (usize, usize),
    count: usize,
    seed: u64,
) -> Result<Vec<[f64; 3]>> {
    let origins = sample_patch_origins(region.width, region.height, patch, count, seed)?;
    let (pw, ph) = patch;
    let area = (pw * ph) as f64;
    let mut out = Vec::with_capacity(count);
    for (x, y) in origins {
        let mut sum = [0.0; 3];
        for row in y..y + ph {
            for col in x..x + pw {
                let px = region.pixels[row * region.width + col];
                sum[0] += px.h;
                sum[1] += px.s;
                sum[2] += px.v;
            }
        }
        out.push([sum[0] / area, sum[1] / area, sum[2] / area]);
    }
    Ok(out)
}

/// Color bag-of-words: histogram of patch codeword assignments over `count`
/// sampled patches, normalized to sum 1.
pub fn bow_descriptor(
    region: &Region,
    codebook: &Codebook,
    count: usize,
    seed: u64,
) -> Result<PartDescriptor> {
    if count == 0 {
        return Err(Error::InvalidParameter("patch count must be positive".into()));
    }
    let patches = sample_patches(region, PATCH_SIZE, count, seed)?;
    let mut hist = vec![0.0; codebook.k()];
    for p in &patches {
        hist[codebook.quantize(p)?] += 1.0;
    }
    for v in hist.iter_mut() {
        *v /= count as f64;
    }
    PartDescriptor::new(hist)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solid_region(px: Hsv, width: usize, height: usize) -> Region {
        Region::new(width, height, vec![px; width * height]).unwrap()
    }

    #[test]
    fn rgb_to_hsv_known_colors() {
        let red = rgb_to_hsv(255, 0, 0);
        assert_eq!((red.h, red.s, red.v), (0.0, 1.0, 1.0));
        let cyan = rgb_to_hsv(0, 255, 255);
        assert_eq!((cyan.h, cyan.s, cyan.v), (180.0, 1.0, 1.0));
        let green = rgb_to_hsv(0, 255, 0);
        assert_eq!(green.h, 120.0);
        let blue = rgb_to_hsv(0, 0, 255);
        assert_eq!(blue.h, 240.0);
        let black = rgb_to_hsv(0, 0, 0);
        assert_eq!((black.h, black.s, black.v), (0.0, 0.0, 0.0));
        let white = rgb_to_hsv(255, 255, 255);
        assert_eq!((white.h, white.s, white.v), (0.0, 0.0, 1.0));
    }

    #[test]
    fn histogram_of_pure_red_region() {
        let region = solid_region(Hsv { h: 0.0, s: 1.0, v: 1.0 }, 4, 4);
        let layout = HsvLayout::default();
        let d = hsv_histogram(&region, layout).unwrap();
        assert_eq!(d.len(), 40);
        let third = 1.0 / 3.0;
        assert_eq!(d.values()[0], third); // hue bin 0
        assert_eq!(d.values()[24 + 7], third); // top saturation bin
        assert_eq!(d.values()[32 + 7], third); // top value bin
        let nonzero = d.values().iter().filter(|&&v| v != 0.0).count();
        assert_eq!(nonzero, 3);
    }

    #[test]
    fn histogram_of_half_red_half_cyan() {
        // Hand count: 2 pixels at hue 0 and 2 at hue 180 put 1/2 of the hue
        // channel in bins 0 and 12 each; after the 1/3 channel scaling each
        // holds 1/6.
        let red = Hsv { h: 0.0, s: 1.0, v: 1.0 };
        let cyan = Hsv { h: 180.0, s: 1.0, v: 1.0 };
        let region = Region::new(2, 2, vec![red, cyan, red, cyan]).unwrap();
        let d = hsv_histogram(&region, HsvLayout::default()).unwrap();
        assert!((d.values()[0] - 1.0 / 6.0).abs() < 1e-12);
        assert!((d.values()[12] - 1.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn histogram_output_is_40_dimensional_and_normalized() {
        let region = solid_region(Hsv { h: 213.7, s: 0.42, v: 0.9 }, 7, 3);
        let d = hsv_histogram(&region, HsvLayout::default()).unwrap();
        assert_eq!(d.len(), 40);
        let sum: f64 = d.values().iter().sum();
        assert!((sum - 1.0).abs() <= DESCRIPTOR_SUM_TOLERANCE);
    }

    #[test]
    fn histogram_rejects_empty_region() {
        let region = Region::new(0, 0, Vec::new()).unwrap();
        assert!(matches!(
            hsv_histogram(&region, HsvLayout::default()),
            Err(Error::EmptyRegion)
        ));
    }

    #[test]
    fn histogram_is_permutation_invariant() {
        let a = Hsv { h: 10.0, s: 0.2, v: 0.3 };
        let b = Hsv { h: 200.0, s: 0.9, v: 0.8 };
        let c = Hsv { h: 330.0, s: 0.5, v: 0.1 };
        let r1 = Region::new(3, 1, vec![a, b, c]).unwrap();
        let r2 = Region::new(3, 1, vec![c, a, b]).unwrap();
        let layout = HsvLayout::default();
        assert_eq!(
            hsv_histogram(&r1, layout).unwrap(),
            hsv_histogram(&r2, layout).unwrap()
        );
    }

    #[test]
    fn saturation_one_lands_in_top_bin() {
        let layout = HsvLayout::default();
        assert_eq!(layout.unit_bin(1.0, 8), 7);
        assert_eq!(layout.unit_bin(0.0, 8), 0);
        // Right-exclusive boundaries: 1/8 belongs to bin 1.
        assert_eq!(layout.unit_bin(0.125, 8), 1);
    }

    #[test]
    fn patch_sampling_on_exact_fit_region_is_forced() {
        let region = solid_region(Hsv { h: 120.0, s: 0.5, v: 0.5 }, 15, 15);
        let origins = sample_patch_origins(region.width(), region.height(), PATCH_SIZE, 1, 3).unwrap();
        assert_eq!(origins, vec![(0, 0)]);
        let patches = sample_patches(&region, PATCH_SIZE, 1, 3).unwrap();
        assert_eq!(patches.len(), 1);
        assert!((patches[0][0] - 120.0).abs() < 1e-12);
    }

    #[test]
    fn patch_sampling_is_deterministic() {
        let a = sample_patch_origins(64, 64, PATCH_SIZE, 50, 99).unwrap();
        let b = sample_patch_origins(64, 64, PATCH_SIZE, 50, 99).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn patch_corners_stay_in_bounds() {
        let origins = sample_patch_origins(30, 30, PATCH_SIZE, 100, 5).unwrap();
        for (x, y) in origins {
            assert!(x <= 15 && y <= 15, "corner ({x},{y}) out of range");
        }
    }

    #[test]
    fn patch_sampling_rejects_small_region() {
        assert!(matches!(
            sample_patch_origins(14, 30, PATCH_SIZE, 1, 0),
            Err(Error::RegionTooSmall { .. })
        ));
    }

    #[test]
    fn descriptor_rejects_negative_and_unnormalized() {
        assert!(PartDescriptor::new(vec![0.5, -0.5, 1.0]).is_err());
        assert!(PartDescriptor::new(vec![0.5, 0.4]).is_err());
        assert!(PartDescriptor::new(vec![]).is_err());
        assert!(PartDescriptor::new(vec![0.25; 4]).is_ok());
    }

    #[test]
    fn holistic_single_hidden() {
        let d = PartDescriptor::new(vec![0.5, 0.5]).unwrap();
        let h = HolisticDescriptor::new(vec![Some(d.clone()), None]).unwrap();
        assert_eq!(h.single_hidden().unwrap(), 1);
        assert_eq!(h.visible_mask(), vec![true, false]);

        let all_visible = HolisticDescriptor::new(vec![Some(d.clone()), Some(d.clone())]).unwrap();
        assert!(all_visible.single_hidden().is_err());
        let two_hidden = HolisticDescriptor::new(vec![None, None]).unwrap();
        assert!(two_hidden.single_hidden().is_err());
    }

    #[test]
    fn crop_extracts_expected_pixels() {
        let a = Hsv { h: 0.0, s: 0.0, v: 0.0 };
        let b = Hsv { h: 100.0, s: 1.0, v: 1.0 };
        // 2x2 image: [a b / b a], crop the right column.
        let region = Region::new(2, 2, vec![a, b, b, a]).unwrap();
        let right = region.crop(1, 0, 1, 2).unwrap();
        assert_eq!(right.pixels(), &[b, a]);
        assert!(region.crop(1, 1, 2, 1).is_err());
    }
}
