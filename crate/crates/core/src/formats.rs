//! JSON file formats for functions, spectra, orders and supports.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::FieldParams;
use crate::progressions::SupportSet;
use crate::spectrum::SpectralOrder;
use crate::transform::{DensityFunction, Spectrum};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionFile {
    pub p: u32,
    pub n: u32,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumFile {
    pub p: u32,
    pub n: u32,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderFile {
    pub perm: Vec<usize>,
    pub mags: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportFile {
    pub p: u32,
    pub n: u32,
    pub members: Vec<usize>,
}

fn parse<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))
}

impl From<&DensityFunction> for FunctionFile {
    fn from(f: &DensityFunction) -> Self {
        FunctionFile { p: f.params().p(), n: f.params().n(), values: f.values().to_vec() }
    }
}

impl FunctionFile {
    pub fn into_function(self) -> Result<DensityFunction> {
        DensityFunction::new(FieldParams::new(self.p, self.n)?, self.values)
    }
}

impl From<&Spectrum> for SpectrumFile {
    fn from(s: &Spectrum) -> Self {
        SpectrumFile {
            p: s.params().p(),
            n: s.params().n(),
            re: s.coeffs().iter().map(|z| z.re).collect(),
            im: s.coeffs().iter().map(|z| z.im).collect(),
        }
    }
}

impl SpectrumFile {
    pub fn into_spectrum(self) -> Result<Spectrum> {
        let params = FieldParams::new(self.p, self.n)?;
        if self.re.len() != self.im.len() {
            return Err(Error::LengthMismatch { expected: self.re.len(), found: self.im.len() });
        }
        let coeffs = self.re.into_iter().zip(self.im).map(|(re, im)| Complex64::new(re, im)).collect();
        Spectrum::new(params, coeffs)
    }
}

impl From<&SpectralOrder> for OrderFile {
    fn from(o: &SpectralOrder) -> Self {
        OrderFile { perm: o.perm().to_vec(), mags: o.mags().to_vec() }
    }
}

impl OrderFile {
    pub fn into_order(self, params: FieldParams) -> Result<SpectralOrder> {
        SpectralOrder::from_parts(params, self.perm, self.mags)
    }
}

impl From<&SupportSet> for SupportFile {
    fn from(s: &SupportSet) -> Self {
        SupportFile { p: s.params().p(), n: s.params().n(), members: s.members().to_vec() }
    }
}

impl SupportFile {
    pub fn into_support(self) -> Result<SupportSet> {
        SupportSet::from_members(FieldParams::new(self.p, self.n)?, &self.members)
    }
}

pub fn function_from_json(text: &str) -> Result<DensityFunction> {
    parse::<FunctionFile>(text)?.into_function()
}

pub fn function_to_json(f: &DensityFunction) -> String {
    serde_json::to_string(&FunctionFile::from(f)).expect("function serializes")
}

pub fn spectrum_from_json(text: &str) -> Result<Spectrum> {
    parse::<SpectrumFile>(text)?.into_spectrum()
}

pub fn spectrum_to_json(s: &Spectrum) -> String {
    serde_json::to_string(&SpectrumFile::from(s)).expect("spectrum serializes")
}

pub fn order_from_json(params: FieldParams, text: &str) -> Result<SpectralOrder> {
    parse::<OrderFile>(text)?.into_order(params)
}

pub fn order_to_json(o: &SpectralOrder) -> String {
    serde_json::to_string(&OrderFile::from(o)).expect("order serializes")
}

pub fn support_from_json(text: &str) -> Result<SupportSet> {
    parse::<SupportFile>(text)?.into_support()
}

pub fn support_to_json(s: &SupportSet) -> String {
    serde_json::to_string(&SupportFile::from(s)).expect("support serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::spectral_order;
    use crate::transform::dft;

    #[test]
    fn round_trips() {
        let params = FieldParams::new(3, 2).unwrap();
        let f = DensityFunction::indicator(params, &[0, 4, 5]).unwrap();
        assert_eq!(function_from_json(&function_to_json(&f)).unwrap(), f);
        let s = dft(&f);
        assert_eq!(spectrum_from_json(&spectrum_to_json(&s)).unwrap(), s);
        let o = spectral_order(&s).unwrap();
        assert_eq!(order_from_json(params, &order_to_json(&o)).unwrap(), o);
        let sup = SupportSet::of(&f);
        assert_eq!(support_from_json(&support_to_json(&sup)).unwrap(), sup);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(function_from_json("{\"p\": 3"), Err(Error::Format(_))));
        assert!(function_from_json(r#"{"p":3,"n":1,"values":[0.5,0.5]}"#).is_err());
        assert!(function_from_json(r#"{"p":4,"n":1,"values":[0,0,0,0]}"#).is_err());
        assert!(function_from_json(r#"{"p":3,"n":1,"values":[0,2,0]}"#).is_err());
        assert!(support_from_json(r#"{"p":3,"n":1,"members":[5]}"#).is_err());
    }
}
