//! CSV loaders for edge lists and OD pairs.
//!
//! Edge list header: `from,to,capacity,asset_id,failed_capacity`.
//! OD header: `origin,destination`. Node ids are opaque strings.

use std::io::Read;
use std::path::Path;

use super::{DroppedLink, Network, NetworkBuilder};
use crate::error::{Error, Result};
use crate::risk::AssetRegistry;
use crate::scalar::Real;

/// Detour capacity of a failed bridge link: one lane at 20 mi/h against a
/// 60 mi/h nominal highway speed.
pub const DETOUR_CAPACITY: f64 = 0.333;

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    /// Fill a missing `failed_capacity` on asset links with
    /// `min(DETOUR_CAPACITY, capacity)` instead of rejecting the row.
    pub detour_default: bool,
}

fn parse_error(source: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        source_name: source.to_owned(),
        line,
        message: message.into(),
    }
}

fn csv_reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(r)
}

/// Reads `origin,destination` rows.
pub fn load_od_pairs<R: Read>(reader: R, source: &str) -> Result<Vec<(String, String, usize)>> {
    let mut rdr = csv_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| parse_error(source, 1, e.to_string()))?
        .clone();
    let col = |n: &str| headers.iter().position(|h| h == n);
    let (Some(o), Some(d)) = (col("origin"), col("destination")) else {
        return Err(parse_error(source, 1, "expected header origin,destination"));
    };
    let mut out = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let line = row + 2;
        let rec = rec.map_err(|e| parse_error(source, line, e.to_string()))?;
        let get = |c: usize, what: &str| {
            rec.get(c)
                .filter(|s| !s.is_empty())
                .map(str::to_owned)
                .ok_or_else(|| parse_error(source, line, format!("missing {what}")))
        };
        out.push((get(o, "origin")?, get(d, "destination")?, line));
    }
    Ok(out)
}

/// Builds a network from an edge list and an OD list. Asset ids are
/// resolved against `registry`.
pub fn read_network<T: Real, R1: Read, R2: Read>(
    edges: R1,
    edges_source: &str,
    od: R2,
    od_source: &str,
    registry: &AssetRegistry<T>,
    options: LoadOptions,
) -> Result<(Network<T>, Vec<DroppedLink<T>>)> {
    let mut builder = NetworkBuilder::<T>::new(registry.len());
    let src = edges_source;
    let mut rdr = csv_reader(edges);
    let headers = rdr
        .headers()
        .map_err(|e| parse_error(src, 1, e.to_string()))?
        .clone();
    let col = |n: &str| headers.iter().position(|h| h == n);
    let (Some(from_c), Some(to_c), Some(cap_c)) = (col("from"), col("to"), col("capacity")) else {
        return Err(parse_error(
            src,
            1,
            "expected header from,to,capacity,asset_id,failed_capacity",
        ));
    };
    let asset_c = col("asset_id");
    let failed_c = col("failed_capacity");

    for (row, rec) in rdr.records().enumerate() {
        let line = row + 2;
        let rec = rec.map_err(|e| parse_error(src, line, e.to_string()))?;
        let field = |c: Option<usize>| c.and_then(|c| rec.get(c)).filter(|s| !s.is_empty());
        let from = field(Some(from_c)).ok_or_else(|| parse_error(src, line, "missing from"))?;
        let to = field(Some(to_c)).ok_or_else(|| parse_error(src, line, "missing to"))?;
        let number = |s: &str, what: &str| -> Result<f64> {
            let v: f64 = s
                .parse()
                .map_err(|e| parse_error(src, line, format!("bad {what} '{s}': {e}")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(parse_error(src, line, format!("{what} is not finite")))
            }
        };
        let capacity = number(
            field(Some(cap_c)).ok_or_else(|| parse_error(src, line, "missing capacity"))?,
            "capacity",
        )?;
        let asset = match field(asset_c) {
            None => None,
            Some(id) if id.contains(';') => {
                return Err(parse_error(src, line, "multiple assets on one link"));
            }
            Some(id) => Some(registry.index_of(id).ok_or_else(|| {
                parse_error(src, line, format!("asset '{id}' not in asset registry"))
            })?),
        };
        let failed = match (field(failed_c), asset) {
            (Some(f), Some(_)) => Some(number(f, "failed_capacity")?),
            (None, Some(_)) if options.detour_default => Some(DETOUR_CAPACITY.min(capacity)),
            (None, Some(_)) => {
                return Err(parse_error(
                    src,
                    line,
                    "asset link requires failed_capacity",
                ));
            }
            (_, None) => None,
        };
        builder
            .link(from, to, T::lit(capacity), asset, failed.map(T::lit))
            .map_err(|e| parse_error(src, line, e.to_string()))?;
    }

    for (o, d, line) in load_od_pairs(od, od_source)? {
        builder
            .od_pair(&o, &d)
            .map_err(|e| parse_error(od_source, line, e.to_string()))?;
    }
    builder.build()
}

pub fn load_network<T: Real>(
    edges: impl AsRef<Path>,
    od: impl AsRef<Path>,
    registry: &AssetRegistry<T>,
    options: LoadOptions,
) -> Result<(Network<T>, Vec<DroppedLink<T>>)> {
    let (edges, od) = (edges.as_ref(), od.as_ref());
    read_network(
        std::fs::File::open(edges)?,
        &edges.display().to_string(),
        std::fs::File::open(od)?,
        &od.display().to_string(),
        registry,
        options,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn registry() -> AssetRegistry<f64> {
        AssetRegistry::new(
            vec!["B1".into(), "B2".into(), "B3".into()],
            vec![1.5, 2.5, 2.3],
            None,
        )
        .unwrap()
    }

    #[test]
    fn reads_edges_and_od() {
        let edges = "from,to,capacity,asset_id,failed_capacity\n\
                     O,B,3,B1,0\nO,A,3,B2,0\nA,B,3,,\nB,D,5,B3,0\n";
        let od = "origin,destination\nO,D\n";
        let (net, dropped) = read_network::<f64, _, _>(
            edges.as_bytes(),
            "edges",
            od.as_bytes(),
            "od",
            &registry(),
            LoadOptions::default(),
        )
        .unwrap();
        assert!(dropped.is_empty());
        assert_eq!(net.links().len(), 4);
        assert_eq!(net.baseline_capacity(), 5.0);
        assert_eq!(net.links()[3].asset, Some(2));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let od = "origin,destination\nO,D\n";
        let cases = [
            ("from,to,capacity,asset_id,failed_capacity\nO,D,x,,\n", 2),
            (
                "from,to,capacity,asset_id,failed_capacity\nO,D,1,,\nO,X,1,B9,0\n",
                3,
            ),
            ("from,to,capacity,asset_id,failed_capacity\nO,D,1,B1,\n", 2),
            (
                "from,to,capacity,asset_id,failed_capacity\nO,D,1,B1;B2,0\n",
                2,
            ),
            ("from,to,capacity,asset_id,failed_capacity\nO,D,1,B1,4\n", 2),
            ("src,dst\nO,D\n", 1),
        ];
        for (edges, want) in cases {
            let got = read_network::<f64, _, _>(
                edges.as_bytes(),
                "edges",
                od.as_bytes(),
                "od",
                &registry(),
                LoadOptions::default(),
            );
            match got {
                Err(Error::Parse { line, .. }) => assert_eq!(line, want, "{edges}"),
                other => panic!("expected parse error for {edges}: {other:?}"),
            }
        }
        let bad_od = "origin,destination\nO,Q\n";
        let got = read_network::<f64, _, _>(
            "from,to,capacity\nO,D,1\n".as_bytes(),
            "edges",
            bad_od.as_bytes(),
            "od",
            &registry(),
            LoadOptions::default(),
        );
        assert!(matches!(got, Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn detour_default_fills_failed_capacity() {
        let edges = "from,to,capacity,asset_id\nO,D,2,B1\n";
        let od = "origin,destination\nO,D\n";
        let (net, _) = read_network::<f64, _, _>(
            edges.as_bytes(),
            "edges",
            od.as_bytes(),
            "od",
            &registry(),
            LoadOptions {
                detour_default: true,
            },
        )
        .unwrap();
        assert_eq!(net.links()[0].failed_capacity, DETOUR_CAPACITY);
    }
}
