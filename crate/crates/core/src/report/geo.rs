use crate::clustering::ClusterAssignment;
use crate::error::{AtdError, Result};
use crate::stats::Registry;
use serde::Serialize;
use std::io::Write;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeoFeature {
    pub code: String,
    pub name: String,
    pub family: String,
    pub major: usize,
    pub minor: Option<usize>,
    pub label: String,
    #[serde(skip)]
    pub lon: f64,
    #[serde(skip)]
    pub lat: f64,
}

/// One point per clustered language, in cluster-table order.
pub fn export_geo(clusters: &ClusterAssignment, registry: &Registry) -> Result<Vec<GeoFeature>> {
    let mut missing = Vec::new();
    let mut out = Vec::with_capacity(clusters.leaves.len());
    for leaf in &clusters.leaves {
        let info = registry.get(&leaf.label);
        let Some((info, lat, lon)) = info.and_then(|i| Some((i, i.lat?, i.lon?))) else {
            missing.push(leaf.label.clone());
            continue;
        };
        if !(-90.0..=90.0).contains(&lat) || !(-180.0..=180.0).contains(&lon) {
            return Err(AtdError::Registry(format!(
                "{}: coordinates ({lat}, {lon}) out of range",
                leaf.label
            )));
        }
        out.push(GeoFeature {
            code: leaf.label.clone(),
            name: info.name.clone(),
            family: info.family.clone(),
            major: leaf.major,
            minor: leaf.minor,
            label: leaf.display_label(),
            lon,
            lat,
        });
    }
    if !missing.is_empty() {
        return Err(AtdError::MissingCoordinates(missing));
    }
    Ok(out)
}

/// A GeoJSON feature collection; the manifest digest rides along as the
/// foreign member `atd_manifest`.
pub fn write_geojson<W: Write>(mut w: W, features: &[GeoFeature], digest: Option<&str>) -> Result<()> {
    #[derive(Serialize)]
    struct Point {
        r#type: &'static str,
        coordinates: [f64; 2],
    }
    #[derive(Serialize)]
    struct Feature<'a> {
        r#type: &'static str,
        geometry: Point,
        properties: &'a GeoFeature,
    }
    #[derive(Serialize)]
    struct Collection<'a> {
        r#type: &'static str,
        #[serde(skip_serializing_if = "Option::is_none")]
        atd_manifest: Option<&'a str>,
        features: Vec<Feature<'a>>,
    }
    let doc = Collection {
        r#type: "FeatureCollection",
        atd_manifest: digest,
        features: features
            .iter()
            .map(|f| Feature {
                r#type: "Feature",
                geometry: Point {
                    r#type: "Point",
                    coordinates: [f.lon, f.lat],
                },
                properties: f,
            })
            .collect(),
    };
    serde_json::to_writer_pretty(&mut w, &doc)?;
    writeln!(w)?;
    Ok(())
}
