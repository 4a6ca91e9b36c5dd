//! Diarization scoring: timeline discretization into 10ms frames with a
//! dedicated overlap cluster, optimal system-to-reference speaker mapping,
//! DER, and frame-level mutual information in bits.

use std::collections::HashMap;

use thiserror::Error;

/// Default scoring granularity in seconds.
pub const DEFAULT_FRAME_SIZE: f64 = 0.010;

/// Stand-in speaker name for segments that carry no label.
const UNLABELED: &str = "_unlabeled";

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("frame sequences differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("timeline durations differ: reference {reference}s vs system {system}s")]
    DurationMismatch { reference: f64, system: f64 },
    #[error("contingency table has no frames")]
    EmptyTable,
    #[error("reference timeline contains no speech")]
    EmptyReference,
    #[error("invalid segment: {0}")]
    InvalidSegment(String),
}

/// One speech segment. Reference timelines may contain overlapping segments
/// (simultaneous speakers); unlabeled segments are allowed for clustering
/// input where only the boundaries matter.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    start: f64,
    end: f64,
    label: Option<String>,
}

impl Segment {
    pub fn new(start: f64, end: f64, label: Option<String>) -> Result<Self, MetricsError> {
        if !start.is_finite() || !end.is_finite() || start < 0.0 {
            return Err(MetricsError::InvalidSegment(format!(
                "non-finite or negative bounds [{start}, {end})"
            )));
        }
        if end <= start {
            return Err(MetricsError::InvalidSegment(format!(
                "non-positive duration [{start}, {end})"
            )));
        }
        if let Some(l) = &label {
            if l.is_empty() {
                return Err(MetricsError::InvalidSegment("empty label".into()));
            }
        }
        Ok(Self { start, end, label })
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn duration(&self) -> f64 {
        self.end - self.start
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }
}

/// Time-stamped speech segments covering `[0, duration]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentTimeline {
    segments: Vec<Segment>,
    duration: f64,
}

impl SegmentTimeline {
    pub fn new(segments: Vec<Segment>, duration: f64) -> Result<Self, MetricsError> {
        if !duration.is_finite() || duration < 0.0 {
            return Err(MetricsError::InvalidSegment(format!(
                "bad duration {duration}"
            )));
        }
        if let Some(seg) = segments.iter().find(|s| s.end > duration) {
            return Err(MetricsError::InvalidSegment(format!(
                "segment [{}, {}) exceeds duration {duration}",
                seg.start, seg.end
            )));
        }
        Ok(Self { segments, duration })
    }

    /// Duration taken as the latest segment end.
    pub fn from_segments(segments: Vec<Segment>) -> Self {
        let duration = segments.iter().map(|s| s.end).fold(0.0, f64::max);
        Self { segments, duration }
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    /// Same boundaries, new labels (index-aligned). Used to turn cluster ids
    /// into an output timeline without touching any segment times.
    pub fn relabeled(&self, labels: &[String]) -> Result<Self, MetricsError> {
        if labels.len() != self.segments.len() {
            return Err(MetricsError::LengthMismatch {
                left: labels.len(),
                right: self.segments.len(),
            });
        }
        let segments = self
            .segments
            .iter()
            .zip(labels)
            .map(|(s, l)| Segment::new(s.start, s.end, Some(l.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            segments,
            duration: self.duration,
        })
    }
}

/// Per-frame label: a speaker (interned index), overlapped speech, or none.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FrameId {
    NonSpeech,
    Overlap,
    Speaker(u32),
}

/// Frame-level labels at a fixed frame size.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameLabels {
    frame_size: f64,
    ids: Vec<FrameId>,
    speakers: Vec<String>,
}

impl FrameLabels {
    pub fn frame_size(&self) -> f64 {
        self.frame_size
    }

    pub fn ids(&self) -> &[FrameId] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn speaker_name(&self, id: u32) -> &str {
        &self.speakers[id as usize]
    }

    fn pad_to(&mut self, len: usize) {
        while self.ids.len() < len {
            self.ids.push(FrameId::NonSpeech);
        }
    }
}

fn frame_count(duration: f64, frame_size: f64) -> usize {
    if duration <= 0.0 {
        return 0;
    }
    // shave an ulp-scale sliver so 5.000000000000001 from division noise
    // does not round up to an extra frame
    ((duration / frame_size) * (1.0 - 1e-12)).ceil() as usize
}

/// Converts a timeline to frame labels. A frame carries the label of the
/// speaker active at its midpoint; two or more distinct speakers there make
/// it OVERLAP, none make it NONSPEECH.
pub fn discretize(timeline: &SegmentTimeline, frame_size: f64) -> FrameLabels {
    let n_frames = frame_count(timeline.duration(), frame_size);
    let mut ids = vec![FrameId::NonSpeech; n_frames];
    let mut speakers: Vec<String> = Vec::new();
    let mut intern: HashMap<String, u32> = HashMap::new();

    for seg in timeline.segments() {
        let name = seg.label().unwrap_or(UNLABELED);
        let sid = *intern.entry(name.to_string()).or_insert_with(|| {
            speakers.push(name.to_string());
            (speakers.len() - 1) as u32
        });
        // approximate frame range, then the exact midpoint test per frame
        let lo = ((seg.start() / frame_size - 0.5).floor() as i64 - 1).max(0) as usize;
        let hi = (((seg.end() / frame_size - 0.5).ceil() as i64 + 1).max(0) as usize)
            .min(n_frames.saturating_sub(1));
        for (t, slot) in ids.iter_mut().enumerate().take(hi + 1).skip(lo) {
            let mid = (t as f64 + 0.5) * frame_size;
            if mid < seg.start() || mid >= seg.end() {
                continue;
            }
            match slot {
                FrameId::NonSpeech => *slot = FrameId::Speaker(sid),
                FrameId::Speaker(existing) if *existing != sid => *slot = FrameId::Overlap,
                _ => {}
            }
        }
    }
    FrameLabels {
        frame_size,
        ids,
        speakers,
    }
}

/// Co-occurrence counts between two frame labelings. Rows are reference
/// labels, columns system labels, in canonical order (NONSPEECH, OVERLAP,
/// then speakers by first appearance).
#[derive(Debug, Clone, PartialEq)]
pub struct ContingencyTable {
    row_ids: Vec<FrameId>,
    col_ids: Vec<FrameId>,
    counts: Vec<Vec<u64>>,
    row_sums: Vec<u64>,
    col_sums: Vec<u64>,
    total: u64,
}

impl ContingencyTable {
    /// Builds a table directly from counts, treating every row and column as
    /// a speaker cluster.
    pub fn from_counts(counts: Vec<Vec<u64>>) -> Result<Self, MetricsError> {
        if counts.is_empty() || counts[0].is_empty() {
            return Err(MetricsError::EmptyTable);
        }
        let cols = counts[0].len();
        if counts.iter().any(|r| r.len() != cols) {
            return Err(MetricsError::LengthMismatch {
                left: cols,
                right: counts.iter().map(|r| r.len()).find(|&l| l != cols).unwrap_or(0),
            });
        }
        let row_ids = (0..counts.len() as u32).map(FrameId::Speaker).collect();
        let col_ids = (0..cols as u32).map(FrameId::Speaker).collect();
        let row_sums: Vec<u64> = counts.iter().map(|r| r.iter().sum()).collect();
        let col_sums: Vec<u64> = (0..cols)
            .map(|j| counts.iter().map(|r| r[j]).sum())
            .collect();
        let total = row_sums.iter().sum();
        Ok(Self {
            row_ids,
            col_ids,
            counts,
            row_sums,
            col_sums,
            total,
        })
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn row_sums(&self) -> &[u64] {
        &self.row_sums
    }

    pub fn col_sums(&self) -> &[u64] {
        &self.col_sums
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn row_ids(&self) -> &[FrameId] {
        &self.row_ids
    }

    pub fn col_ids(&self) -> &[FrameId] {
        &self.col_ids
    }

    pub fn n_rows(&self) -> usize {
        self.row_ids.len()
    }

    pub fn n_cols(&self) -> usize {
        self.col_ids.len()
    }

    fn row_index(&self, id: FrameId) -> Option<usize> {
        self.row_ids.iter().position(|&r| r == id)
    }

    fn col_index(&self, id: FrameId) -> Option<usize> {
        self.col_ids.iter().position(|&c| c == id)
    }

    pub fn transposed(&self) -> Self {
        let counts: Vec<Vec<u64>> = (0..self.n_cols())
            .map(|j| (0..self.n_rows()).map(|i| self.counts[i][j]).collect())
            .collect();
        Self {
            row_ids: self.col_ids.clone(),
            col_ids: self.row_ids.clone(),
            counts,
            row_sums: self.col_sums.clone(),
            col_sums: self.row_sums.clone(),
            total: self.total,
        }
    }
}

fn occurring_ids(frames: &FrameLabels) -> Vec<FrameId> {
    let mut seen: Vec<FrameId> = Vec::new();
    let mut speakers: Vec<u32> = Vec::new();
    let (mut has_ns, mut has_ov) = (false, false);
    for id in frames.ids() {
        match id {
            FrameId::NonSpeech => has_ns = true,
            FrameId::Overlap => has_ov = true,
            FrameId::Speaker(s) => {
                if !speakers.contains(s) {
                    speakers.push(*s);
                }
            }
        }
    }
    if has_ns {
        seen.push(FrameId::NonSpeech);
    }
    if has_ov {
        seen.push(FrameId::Overlap);
    }
    seen.extend(speakers.into_iter().map(FrameId::Speaker));
    seen
}

/// Counts label co-occurrences over all frames.
pub fn contingency(
    reference: &FrameLabels,
    system: &FrameLabels,
) -> Result<ContingencyTable, MetricsError> {
    if reference.len() != system.len() || reference.frame_size() != system.frame_size() {
        return Err(MetricsError::LengthMismatch {
            left: reference.len(),
            right: system.len(),
        });
    }
    let row_ids = occurring_ids(reference);
    let col_ids = occurring_ids(system);
    let row_of: HashMap<FrameId, usize> =
        row_ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
    let col_of: HashMap<FrameId, usize> =
        col_ids.iter().enumerate().map(|(j, &id)| (id, j)).collect();

    let mut counts = vec![vec![0u64; col_ids.len()]; row_ids.len()];
    for (r, s) in reference.ids().iter().zip(system.ids()) {
        counts[row_of[r]][col_of[s]] += 1;
    }
    let row_sums: Vec<u64> = counts.iter().map(|r| r.iter().sum()).collect();
    let col_sums: Vec<u64> = (0..col_ids.len())
        .map(|j| counts.iter().map(|r| r[j]).sum())
        .collect();
    let total = row_sums.iter().sum();
    Ok(ContingencyTable {
        row_ids,
        col_ids,
        counts,
        row_sums,
        col_sums,
        total,
    })
}

/// One-to-one partial map from system columns to reference rows.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterMapping {
    /// Mapped reference row per system column; None = unmapped (counts as
    /// speaker error wherever it intersects reference speech).
    pub sys_to_ref: Vec<Option<usize>>,
}

/// Kuhn-Munkres with potentials: minimum-cost assignment of every row of an
/// n x m cost matrix (n <= m) to a distinct column.
fn hungarian_min(cost: &[Vec<i64>]) -> Vec<usize> {
    let n = cost.len();
    let m = cost[0].len();
    debug_assert!(n <= m);
    const INF: i64 = i64::MAX / 4;
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; m + 1];
    let mut assigned_row = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        assigned_row[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![INF; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = assigned_row[j0];
            let mut delta = INF;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[assigned_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if assigned_row[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            assigned_row[j0] = assigned_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out = vec![usize::MAX; n];
    for j in 1..=m {
        if assigned_row[j] != 0 {
            out[assigned_row[j] - 1] = j - 1;
        }
    }
    out
}

/// Optimal one-to-one speaker mapping maximizing total mapped frame count.
/// NONSPEECH and OVERLAP map only to their reference counterparts.
pub fn optimal_mapping(table: &ContingencyTable) -> ClusterMapping {
    let mut sys_to_ref = vec![None; table.n_cols()];

    for (j, col_id) in table.col_ids().iter().enumerate() {
        match col_id {
            FrameId::NonSpeech => sys_to_ref[j] = table.row_index(FrameId::NonSpeech),
            FrameId::Overlap => sys_to_ref[j] = table.row_index(FrameId::Overlap),
            FrameId::Speaker(_) => {}
        }
    }

    let ref_rows: Vec<usize> = (0..table.n_rows())
        .filter(|&i| matches!(table.row_ids()[i], FrameId::Speaker(_)))
        .collect();
    let sys_cols: Vec<usize> = (0..table.n_cols())
        .filter(|&j| matches!(table.col_ids()[j], FrameId::Speaker(_)))
        .collect();
    if ref_rows.is_empty() || sys_cols.is_empty() {
        return ClusterMapping { sys_to_ref };
    }

    // maximize count = minimize negated count; solve from the smaller side
    if sys_cols.len() <= ref_rows.len() {
        let cost: Vec<Vec<i64>> = sys_cols
            .iter()
            .map(|&j| {
                ref_rows
                    .iter()
                    .map(|&i| -(table.counts()[i][j] as i64))
                    .collect()
            })
            .collect();
        let col_to_row = hungarian_min(&cost);
        for (sj, &j) in sys_cols.iter().enumerate() {
            sys_to_ref[j] = Some(ref_rows[col_to_row[sj]]);
        }
    } else {
        let cost: Vec<Vec<i64>> = ref_rows
            .iter()
            .map(|&i| {
                sys_cols
                    .iter()
                    .map(|&j| -(table.counts()[i][j] as i64))
                    .collect()
            })
            .collect();
        let row_to_col = hungarian_min(&cost);
        for (ri, &i) in ref_rows.iter().enumerate() {
            sys_to_ref[sys_cols[row_to_col[ri]]] = Some(i);
        }
    }
    ClusterMapping { sys_to_ref }
}

/// Discretizes both timelines onto one frame grid: durations must agree
/// within a microsecond, and the shorter frame sequence is padded with
/// NONSPEECH so division noise at the last frame cannot desynchronize them.
pub fn discretize_pair(
    reference: &SegmentTimeline,
    system: &SegmentTimeline,
    frame_size: f64,
) -> Result<(FrameLabels, FrameLabels), MetricsError> {
    if (reference.duration() - system.duration()).abs() > 1e-6 {
        return Err(MetricsError::DurationMismatch {
            reference: reference.duration(),
            system: system.duration(),
        });
    }
    let mut ref_frames = discretize(reference, frame_size);
    let mut sys_frames = discretize(system, frame_size);
    let len = ref_frames.len().max(sys_frames.len());
    ref_frames.pad_to(len);
    sys_frames.pad_to(len);
    Ok((ref_frames, sys_frames))
}

/// DER components in seconds plus the rate itself.
#[derive(Debug, Clone, PartialEq)]
pub struct DerBreakdown {
    pub phi_fa: f64,
    pub phi_miss: f64,
    pub phi_err: f64,
    pub phi_total: f64,
    pub der: f64,
}

/// Scores a system timeline against a reference:
/// DER = (phi_fa + phi_miss + phi_err) / phi_total over 10ms-style frames,
/// no forgiveness collar, overlap as an ordinary extra cluster.
///
/// phi_total is all reference speech (speaker plus overlap frames); the rate
/// is computed on frame counts, so exact hand cases come out exact.
pub fn compute_der(
    reference: &SegmentTimeline,
    system: &SegmentTimeline,
    frame_size: f64,
) -> Result<DerBreakdown, MetricsError> {
    let (ref_frames, sys_frames) = discretize_pair(reference, system, frame_size)?;
    let table = contingency(&ref_frames, &sys_frames)?;
    let mapping = optimal_mapping(&table);

    let mut fa = 0u64;
    let mut miss = 0u64;
    let mut err = 0u64;
    let mut total = 0u64;
    for (r, s) in ref_frames.ids().iter().zip(sys_frames.ids()) {
        let ref_speech = *r != FrameId::NonSpeech;
        let sys_speech = *s != FrameId::NonSpeech;
        if ref_speech {
            total += 1;
        }
        match (ref_speech, sys_speech) {
            (false, false) => {}
            (false, true) => fa += 1,
            (true, false) => miss += 1,
            (true, true) => {
                let row = table.row_index(*r).expect("occurring reference label");
                let col = table.col_index(*s).expect("occurring system label");
                if mapping.sys_to_ref[col] != Some(row) {
                    err += 1;
                }
            }
        }
    }
    if total == 0 {
        return Err(MetricsError::EmptyReference);
    }
    Ok(DerBreakdown {
        phi_fa: fa as f64 * frame_size,
        phi_miss: miss as f64 * frame_size,
        phi_err: err as f64 * frame_size,
        phi_total: total as f64 * frame_size,
        der: (fa + miss + err) as f64 / total as f64,
    })
}

/// Frame-level mutual information in bits:
/// MI = sum_ij (n_ij / N) log2(n_ij N / (r_i s_j)), with 0 log 0 = 0.
pub fn compute_mi(table: &ContingencyTable) -> Result<f64, MetricsError> {
    if table.total() == 0 {
        return Err(MetricsError::EmptyTable);
    }
    let n = table.total() as f64;
    let mut mi = 0.0;
    for (i, row) in table.counts().iter().enumerate() {
        for (j, &count) in row.iter().enumerate() {
            if count == 0 {
                continue;
            }
            let joint = count as f64;
            let ratio = (joint * n) / (table.row_sums()[i] as f64 * table.col_sums()[j] as f64);
            mi += joint / n * ratio.log2();
        }
    }
    Ok(mi)
}

/// Shannon entropy in bits of a marginal count vector.
pub fn entropy_bits(counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let n = total as f64;
    -counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            p * p.log2()
        })
        .sum::<f64>()
}

fn comb2(x: u64) -> f64 {
    (x as f64) * ((x as f64) - 1.0) / 2.0
}

/// Adjusted Rand index between two labelings of the same points; 1 for
/// identical partitions, about 0 for independent ones.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len(), "labelings must have equal length");
    let n = a.len() as u64;
    if n == 0 {
        return 1.0;
    }
    let mut joint: HashMap<(usize, usize), u64> = HashMap::new();
    let mut rows: HashMap<usize, u64> = HashMap::new();
    let mut cols: HashMap<usize, u64> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *joint.entry((x, y)).or_insert(0) += 1;
        *rows.entry(x).or_insert(0) += 1;
        *cols.entry(y).or_insert(0) += 1;
    }
    let index: f64 = joint.values().map(|&c| comb2(c)).sum();
    let row_comb: f64 = rows.values().map(|&c| comb2(c)).sum();
    let col_comb: f64 = cols.values().map(|&c| comb2(c)).sum();
    let expected = row_comb * col_comb / comb2(n);
    let max = 0.5 * (row_comb + col_comb);
    if (max - expected).abs() < 1e-12 {
        return 1.0;
    }
    (index - expected) / (max - expected)
}
