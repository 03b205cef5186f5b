use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{check_subset, frechet_mean, riemannian_distance, FrechetOptions, SpdError, SpdMatrix};
use crate::scalar::Real;

pub const MDM_DOCUMENT_VERSION: u32 = 1;

/// Minimum-distance-to-mean classifier: one Fréchet-mean centroid per class
/// over a channel subset. Classes are kept in sorted label order, which is
/// also the tie-break order at prediction time.
#[derive(Debug, Clone, PartialEq)]
pub struct MdmModel<T: Real> {
    classes: Vec<String>,
    centroids: Vec<SpdMatrix<T>>,
    channel_subset: Vec<usize>,
}

impl<T: Real> MdmModel<T> {
    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn centroids(&self) -> &[SpdMatrix<T>] {
        &self.centroids
    }

    pub fn centroid(&self, class: &str) -> Option<&SpdMatrix<T>> {
        self.classes
            .iter()
            .position(|c| c == class)
            .map(|i| &self.centroids[i])
    }

    pub fn channel_subset(&self) -> &[usize] {
        &self.channel_subset
    }

    pub fn dim(&self) -> usize {
        self.channel_subset.len()
    }

    /// Distance from `cov` (already restricted to the subset) to each
    /// centroid, in class order.
    pub fn distances(&self, cov: &SpdMatrix<T>) -> Result<Vec<T>, SpdError> {
        self.centroids
            .iter()
            .map(|c| riemannian_distance(c, cov))
            .collect()
    }

    /// Predicts from a full-montage covariance by restricting it first.
    pub fn predict_full(&self, full_cov: &SpdMatrix<T>) -> Result<&str, SpdError> {
        mdm_predict(self, &full_cov.restrict(&self.channel_subset)?)
    }

    /// Same classes and subset, each centroid transformed as `W·C·Wᵀ`.
    pub fn congruence(&self, w: &nalgebra::DMatrix<T>) -> Result<Self, SpdError> {
        Ok(Self {
            classes: self.classes.clone(),
            centroids: self
                .centroids
                .iter()
                .map(|c| c.congruence(w))
                .collect::<Result<_, _>>()?,
            channel_subset: self.channel_subset.clone(),
        })
    }

    pub fn to_document(&self) -> MdmDocument {
        MdmDocument {
            version: MDM_DOCUMENT_VERSION,
            classes: self.classes.clone(),
            channel_subset: self.channel_subset.clone(),
            centroids: self.centroids.iter().map(SpdMatrix::to_rows).collect(),
        }
    }

    pub fn from_document(doc: &MdmDocument) -> Result<Self, SpdError> {
        if doc.version != MDM_DOCUMENT_VERSION {
            return Err(SpdError::Document(format!("unsupported version {}", doc.version)));
        }
        if doc.classes.len() < 2 {
            return Err(SpdError::TooFewClasses(doc.classes.len()));
        }
        if doc.classes.len() != doc.centroids.len() {
            return Err(SpdError::Document("one centroid per class required".into()));
        }
        let centroids = doc
            .centroids
            .iter()
            .map(|rows| SpdMatrix::from_rows(rows))
            .collect::<Result<Vec<_>, _>>()?;
        if centroids.iter().any(|c| c.dim() != doc.channel_subset.len()) {
            return Err(SpdError::Document("centroid size differs from channel subset".into()));
        }
        Ok(Self {
            classes: doc.classes.clone(),
            centroids,
            channel_subset: doc.channel_subset.clone(),
        })
    }
}

/// Versioned JSON form of an [`MdmModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MdmDocument {
    pub version: u32,
    pub classes: Vec<String>,
    pub channel_subset: Vec<usize>,
    pub centroids: Vec<Vec<Vec<f64>>>,
}

/// Fits one centroid per class on the covariances restricted to
/// `channel_subset`.
pub fn mdm_fit<T: Real, L: AsRef<str>>(
    covs: &[SpdMatrix<T>],
    labels: &[L],
    channel_subset: &[usize],
    opts: FrechetOptions<T>,
) -> Result<MdmModel<T>, SpdError> {
    if covs.len() != labels.len() {
        return Err(SpdError::LengthMismatch {
            labels: labels.len(),
            matrices: covs.len(),
        });
    }
    let dim = covs.first().ok_or(SpdError::Empty)?.dim();
    if let Some(bad) = covs.iter().find(|c| c.dim() != dim) {
        return Err(SpdError::DimensionMismatch(dim, bad.dim()));
    }
    check_subset(channel_subset, dim)?;

    let mut groups: BTreeMap<&str, Vec<SpdMatrix<T>>> = BTreeMap::new();
    for (cov, label) in covs.iter().zip(labels) {
        groups
            .entry(label.as_ref())
            .or_default()
            .push(cov.restrict(channel_subset)?);
    }
    if groups.len() < 2 {
        return Err(SpdError::TooFewClasses(groups.len()));
    }
    let mut classes = Vec::with_capacity(groups.len());
    let mut centroids = Vec::with_capacity(groups.len());
    for (label, members) in groups {
        centroids.push(frechet_mean(&members, opts)?);
        classes.push(label.to_string());
    }
    Ok(MdmModel {
        classes,
        centroids,
        channel_subset: channel_subset.to_vec(),
    })
}

/// Class whose centroid is nearest to `cov`; ties go to the earlier class.
pub fn mdm_predict<'m, T: Real>(model: &'m MdmModel<T>, cov: &SpdMatrix<T>) -> Result<&'m str, SpdError> {
    if cov.dim() != model.dim() {
        return Err(SpdError::DimensionMismatch(model.dim(), cov.dim()));
    }
    let mut best: Option<(usize, T)> = None;
    for (i, d) in model.distances(cov)?.into_iter().enumerate() {
        if best.is_none_or(|(_, b)| d < b) {
            best = Some((i, d));
        }
    }
    let (i, _) = best.expect("model has at least two classes");
    Ok(&model.classes[i])
}
