//! The `kind:key=val,...` language for mixtures and spectra.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use lmagg::mixture::{
    fi_mixture, product_fi_mixture_closed, sfi_mixture, uniform_mixture, MixtureDensity, NoiseSpec,
};
use lmagg::spectral::{closed_spectral, ClosedForm, SpectralDensity};

#[derive(Debug, Clone, PartialEq)]
pub enum Kind {
    Fi { d: f64 },
    Sfi { d: f64 },
    ProductFi { d1: f64, d2: f64 },
    Uniform { a: f64, b: f64 },
    Table { path: PathBuf },
}

/// A parsed mixture spec with an optional noise variance override `s2`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureSpec {
    pub kind: Kind,
    pub s2: Option<f64>,
    text: String,
}

const KINDS: &str = "fi:d=…, sfi:d=…, productfi:d1=…,d2=…, uniform:a=…,b=…, table:path=… (each may add s2=…)";

fn number(fields: &mut BTreeMap<String, String>, key: &str) -> Result<f64, String> {
    let raw = fields
        .remove(key)
        .ok_or_else(|| format!("missing parameter `{key}`"))?;
    raw.parse()
        .map_err(|_| format!("parameter `{key}` is not a number: `{raw}`"))
}

impl FromStr for MixtureSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (kind, rest) = s
            .split_once(':')
            .ok_or_else(|| format!("expected `kind:key=val,...`, one of {KINDS}"))?;
        let mut fields = BTreeMap::new();
        if kind == "table" && !rest.contains('=') {
            fields.insert("path".to_string(), rest.to_string());
        } else {
            for part in rest.split(',').filter(|p| !p.is_empty()) {
                let (k, v) = part
                    .split_once('=')
                    .ok_or_else(|| format!("expected `key=value`, got `{part}`"))?;
                if fields.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
                    return Err(format!("parameter `{k}` given twice"));
                }
            }
        }
        let s2 = match fields.contains_key("s2") {
            true => Some(number(&mut fields, "s2")?),
            false => None,
        };
        let kind = match kind {
            "fi" => Kind::Fi { d: number(&mut fields, "d")? },
            "sfi" => Kind::Sfi { d: number(&mut fields, "d")? },
            "productfi" => Kind::ProductFi {
                d1: number(&mut fields, "d1")?,
                d2: number(&mut fields, "d2")?,
            },
            "uniform" => Kind::Uniform {
                a: number(&mut fields, "a")?,
                b: number(&mut fields, "b")?,
            },
            "table" => Kind::Table {
                path: fields.remove("path").ok_or("missing parameter `path`")?.into(),
            },
            other => return Err(format!("unknown kind `{other}`; expected one of {KINDS}")),
        };
        if let Some(k) = fields.keys().next() {
            return Err(format!("unknown parameter `{k}`"));
        }
        Ok(MixtureSpec {
            kind,
            s2,
            text: s.to_string(),
        })
    }
}

impl fmt::Display for MixtureSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

impl MixtureSpec {
    /// The mixture density and noise. Closed families default to the noise
    /// that makes the aggregate exactly their spectral density; uniform and
    /// tabulated mixtures default to unit noise.
    pub fn mixture(&self) -> lmagg::Result<(MixtureDensity, NoiseSpec)> {
        let (phi, natural) = match &self.kind {
            Kind::Fi { d } => fi_mixture(*d)?,
            Kind::Sfi { d } => sfi_mixture(*d)?,
            Kind::ProductFi { d1, d2 } => product_fi_mixture_closed(*d1, *d2)?,
            Kind::Uniform { a, b } => (uniform_mixture(*a, *b)?, NoiseSpec::unit()),
            Kind::Table { path } => (MixtureDensity::read_csv(path)?, NoiseSpec::unit()),
        };
        let noise = match self.s2 {
            Some(v) => NoiseSpec::new(v)?,
            None => natural,
        };
        Ok((phi, noise))
    }

    /// The aggregate spectral density, in closed form when one exists.
    pub fn spectrum(&self) -> lmagg::Result<SpectralDensity> {
        let closed = match self.kind {
            Kind::Fi { d } => Some(ClosedForm::Fi { d }),
            Kind::Sfi { d } => Some(ClosedForm::Sfi { d }),
            Kind::ProductFi { d1, d2 } => Some(ClosedForm::ProductFi { d1, d2 }),
            Kind::Uniform { a, b } => Some(ClosedForm::Uniform {
                a,
                b,
                variance: self.s2.unwrap_or(1.0),
            }),
            Kind::Table { .. } => None,
        };
        match closed {
            Some(form) if self.s2.is_none() || matches!(form, ClosedForm::Uniform { .. }) => {
                closed_spectral(form)
            }
            _ => {
                let (phi, noise) = self.mixture()?;
                Ok(SpectralDensity::FromMixture { phi, noise })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_every_kind() {
        let s: MixtureSpec = "fi:d=0.3".parse().unwrap();
        assert_eq!(s.kind, Kind::Fi { d: 0.3 });
        assert_eq!(s.s2, None);
        let s: MixtureSpec = "productfi:d1=0.2,d2=0.3".parse().unwrap();
        assert_eq!(s.kind, Kind::ProductFi { d1: 0.2, d2: 0.3 });
        let s: MixtureSpec = "uniform:a=-0.5,b=0.5,s2=2".parse().unwrap();
        assert_eq!(s.kind, Kind::Uniform { a: -0.5, b: 0.5 });
        assert_eq!(s.s2, Some(2.0));
        let s: MixtureSpec = "table:phi.csv".parse().unwrap();
        assert_eq!(s.kind, Kind::Table { path: "phi.csv".into() });
        let s: MixtureSpec = "table:path=phi.csv,s2=0.5".parse().unwrap();
        assert_eq!(s.kind, Kind::Table { path: "phi.csv".into() });
        assert_eq!(s.s2, Some(0.5));
    }

    #[test]
    fn rejects_malformed_specs() {
        for bad in ["fi", "fi:d", "fi:d=x", "fi:d=0.1,d=0.2", "fi:d=0.1,q=1", "ar:d=0.1", "uniform:a=0"] {
            assert!(bad.parse::<MixtureSpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn range_errors_surface_from_the_library() {
        let s: MixtureSpec = "fi:d=0.7".parse().unwrap();
        let e = s.mixture().unwrap_err().to_string();
        assert!(e.contains("0 < d < 1/2"), "{e}");
    }
}
