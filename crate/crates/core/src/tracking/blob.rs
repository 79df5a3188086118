use super::TrackingError;
use crate::Micros;

/// 8-bit grayscale IR image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IrFrame {
    pub t_us: Micros,
    pub width: usize,
    pub height: usize,
    pixels: Vec<u8>,
}

impl IrFrame {
    pub fn new(t_us: Micros, width: usize, height: usize, pixels: Vec<u8>) -> Result<Self, TrackingError> {
        if pixels.len() != width * height {
            return Err(TrackingError::FrameSize { expected: width * height, actual: pixels.len() });
        }
        Ok(Self { t_us, width, height, pixels })
    }

    pub fn dark(t_us: Micros, width: usize, height: usize) -> Self {
        Self { t_us, width, height, pixels: vec![0; width * height] }
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [u8] {
        &mut self.pixels
    }

    pub fn get(&self, col: usize, row: usize) -> u8 {
        self.pixels[row * self.width + col]
    }

    pub fn set(&mut self, col: usize, row: usize, value: u8) {
        self.pixels[row * self.width + col] = value;
    }
}

/// A thresholded connected component reduced to its intensity-weighted centroid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Blob {
    /// Column coordinate; pixel centers sit on integers.
    pub centroid_u: f64,
    pub centroid_v: f64,
    pub area: usize,
    pub peak: u8,
}

impl Blob {
    /// A blob known only by its centroid (e.g. from a replay record).
    pub fn at(u: f64, v: f64) -> Self {
        Self { centroid_u: u, centroid_v: v, area: 1, peak: 255 }
    }
}

/// Finds 8-connected components of pixels `>= threshold`, dropping those
/// smaller than `min_area`. Sorted by descending area.
pub fn detect_blobs(frame: &IrFrame, threshold: u8, min_area: usize) -> Vec<Blob> {
    let (w, h) = (frame.width, frame.height);
    let px = frame.pixels();
    let mut visited = vec![false; px.len()];
    let mut stack = Vec::new();
    let mut blobs = Vec::new();

    for start in 0..px.len() {
        if visited[start] || px[start] < threshold {
            continue;
        }
        visited[start] = true;
        stack.push(start);
        let (mut sum_w, mut sum_u, mut sum_v) = (0.0, 0.0, 0.0);
        let mut area = 0usize;
        let mut peak = 0u8;

        while let Some(idx) = stack.pop() {
            let (row, col) = (idx / w, idx % w);
            let value = px[idx];
            let weight = f64::from(value);
            sum_w += weight;
            sum_u += weight * col as f64;
            sum_v += weight * row as f64;
            area += 1;
            peak = peak.max(value);

            for dr in -1isize..=1 {
                for dc in -1isize..=1 {
                    if dr == 0 && dc == 0 {
                        continue;
                    }
                    let (r, c) = (row as isize + dr, col as isize + dc);
                    if r < 0 || c < 0 || r >= h as isize || c >= w as isize {
                        continue;
                    }
                    let n = r as usize * w + c as usize;
                    if !visited[n] && px[n] >= threshold {
                        visited[n] = true;
                        stack.push(n);
                    }
                }
            }
        }

        if area >= min_area {
            blobs.push(Blob { centroid_u: sum_u / sum_w, centroid_v: sum_v / sum_w, area, peak });
        }
    }

    blobs.sort_by(|a, b| b.area.cmp(&a.area));
    blobs
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn uniform_square_blob() {
        let mut f = IrFrame::dark(0, 64, 32);
        for row in 10..=12 {
            for col in 20..=22 {
                f.set(col, row, 255);
            }
        }
        let blobs = detect_blobs(&f, 128, 3);
        assert_eq!(blobs.len(), 1);
        assert_eq!(blobs[0].centroid_u, 21.0);
        assert_eq!(blobs[0].centroid_v, 11.0);
        assert_eq!(blobs[0].area, 9);
        assert_eq!(blobs[0].peak, 255);
    }

    #[test]
    fn dark_frame_has_no_blobs() {
        assert!(detect_blobs(&IrFrame::dark(0, 640, 480), 200, 3).is_empty());
    }

    #[test]
    fn diagonal_neighbours_are_connected_and_small_blobs_dropped() {
        let mut f = IrFrame::dark(0, 10, 10);
        f.set(1, 1, 250);
        f.set(2, 2, 250);
        f.set(3, 3, 250);
        f.set(8, 8, 250);
        let blobs = detect_blobs(&f, 200, 3);
        assert_eq!(blobs.len(), 1);
        assert_eq!(blobs[0].area, 3);
        assert_eq!(detect_blobs(&f, 200, 1).len(), 2);
    }

    #[test]
    fn frame_size_is_checked() {
        assert!(IrFrame::new(0, 4, 4, vec![0; 15]).is_err());
    }

    proptest! {
        #[test]
        fn raising_threshold_never_grows_a_blob(
            pixels in proptest::collection::vec(any::<u8>(), 16 * 12),
            lo in 1u8..200, delta in 1u8..50,
        ) {
            let f = IrFrame::new(0, 16, 12, pixels).unwrap();
            let low = detect_blobs(&f, lo, 1);
            let high = detect_blobs(&f, lo.saturating_add(delta).min(254), 1);
            let max_low = low.iter().map(|b| b.area).max().unwrap_or(0);
            for b in &high {
                prop_assert!(b.area <= max_low);
            }
            let total_low: usize = low.iter().map(|b| b.area).sum();
            let total_high: usize = high.iter().map(|b| b.area).sum();
            prop_assert!(total_high <= total_low);
        }
    }
}
