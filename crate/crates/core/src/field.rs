//! Scalar samples on a grid, the simulated-perturbation order, raw volume
//! ingestion and synthetic fields.

use std::cmp::Ordering;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridDomain, VertexId};

/// Storage type of the samples.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    U8,
    U16,
    U32,
    U64,
    I8,
    I16,
    I32,
    I64,
    /// Only produced by negating 64-bit integer fields.
    I128,
    F32,
    F64,
}

impl Dtype {
    pub fn size(self) -> usize {
        match self {
            Dtype::U8 | Dtype::I8 => 1,
            Dtype::U16 | Dtype::I16 => 2,
            Dtype::U32 | Dtype::I32 | Dtype::F32 => 4,
            Dtype::U64 | Dtype::I64 | Dtype::F64 => 8,
            Dtype::I128 => 16,
        }
    }

    pub fn is_float(self) -> bool {
        matches!(self, Dtype::F32 | Dtype::F64)
    }

    pub fn name(self) -> &'static str {
        match self {
            Dtype::U8 => "u8",
            Dtype::U16 => "u16",
            Dtype::U32 => "u32",
            Dtype::U64 => "u64",
            Dtype::I8 => "i8",
            Dtype::I16 => "i16",
            Dtype::I32 => "i32",
            Dtype::I64 => "i64",
            Dtype::I128 => "i128",
            Dtype::F32 => "f32",
            Dtype::F64 => "f64",
        }
    }
}

impl fmt::Display for Dtype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Dtype {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "u8" => Dtype::U8,
            "u16" => Dtype::U16,
            "u32" => Dtype::U32,
            "u64" => Dtype::U64,
            "i8" => Dtype::I8,
            "i16" => Dtype::I16,
            "i32" => Dtype::I32,
            "i64" => Dtype::I64,
            "i128" => Dtype::I128,
            "f32" => Dtype::F32,
            "f64" => Dtype::F64,
            other => return Err(Error::invalid(format!("unknown sample type '{other}'"))),
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Endian {
    #[default]
    Little,
    Big,
}

impl FromStr for Endian {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "le" | "little" => Ok(Endian::Little),
            "be" | "big" => Ok(Endian::Big),
            other => Err(Error::invalid(format!("unknown endianness '{other}'"))),
        }
    }
}

/// An exact scalar value: integers are kept as integers.
#[derive(Clone, Copy, Debug)]
pub enum Scalar {
    Int(i128),
    Float(f64),
}

impl Scalar {
    pub fn as_f64(self) -> f64 {
        match self {
            Scalar::Int(i) => i as f64,
            Scalar::Float(x) => x,
        }
    }

    /// `self - other` as a float; integer differences are formed exactly first.
    pub fn diff(self, other: Scalar) -> f64 {
        match (self, other) {
            (Scalar::Int(a), Scalar::Int(b)) => (a - b) as f64,
            (a, b) => a.as_f64() - b.as_f64(),
        }
    }

    pub fn parse(s: &str, dtype: Dtype) -> Option<Scalar> {
        if dtype.is_float() {
            s.parse::<f64>().ok().filter(|x| x.is_finite()).map(Scalar::Float)
        } else {
            s.parse::<i128>().ok().map(Scalar::Int)
        }
    }
}

impl PartialEq for Scalar {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Scalar {}

impl PartialOrd for Scalar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Scalar {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Scalar::Int(a), Scalar::Int(b)) => a.cmp(b),
            (Scalar::Float(a), Scalar::Float(b)) => a.total_cmp(b),
            (Scalar::Int(_), Scalar::Float(_)) => Ordering::Less,
            (Scalar::Float(_), Scalar::Int(_)) => Ordering::Greater,
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Int(i) => write!(f, "{i}"),
            Scalar::Float(x) => write!(f, "{x:?}"),
        }
    }
}

/// A sample type usable in the hot loops.
pub trait Sample: Copy + Send + Sync + 'static {
    const DTYPE: Dtype;
    const SIZE: usize;

    /// Total order on finite samples.
    fn cmp_sample(&self, other: &Self) -> Ordering;
    fn to_scalar(self) -> Scalar;
    fn is_finite(self) -> bool;
    fn read(bytes: &[u8], endian: Endian) -> Self;
    fn write(self, endian: Endian, out: &mut Vec<u8>);
}

macro_rules! int_sample {
    ($t:ty, $d:ident) => {
        impl Sample for $t {
            const DTYPE: Dtype = Dtype::$d;
            const SIZE: usize = std::mem::size_of::<$t>();

            #[inline]
            fn cmp_sample(&self, other: &Self) -> Ordering {
                self.cmp(other)
            }
            #[inline]
            fn to_scalar(self) -> Scalar {
                Scalar::Int(self as i128)
            }
            #[inline]
            fn is_finite(self) -> bool {
                true
            }
            fn read(bytes: &[u8], endian: Endian) -> Self {
                let arr = bytes.try_into().expect("sample width");
                match endian {
                    Endian::Little => <$t>::from_le_bytes(arr),
                    Endian::Big => <$t>::from_be_bytes(arr),
                }
            }
            fn write(self, endian: Endian, out: &mut Vec<u8>) {
                match endian {
                    Endian::Little => out.extend_from_slice(&self.to_le_bytes()),
                    Endian::Big => out.extend_from_slice(&self.to_be_bytes()),
                }
            }
        }
    };
}

macro_rules! float_sample {
    ($t:ty, $d:ident) => {
        impl Sample for $t {
            const DTYPE: Dtype = Dtype::$d;
            const SIZE: usize = std::mem::size_of::<$t>();

            #[inline]
            fn cmp_sample(&self, other: &Self) -> Ordering {
                // Finite by construction; equal for +0 and -0.
                self.partial_cmp(other).unwrap_or(Ordering::Equal)
            }
            #[inline]
            fn to_scalar(self) -> Scalar {
                Scalar::Float(self as f64 + 0.0)
            }
            #[inline]
            fn is_finite(self) -> bool {
                <$t>::is_finite(self)
            }
            fn read(bytes: &[u8], endian: Endian) -> Self {
                let arr = bytes.try_into().expect("sample width");
                match endian {
                    Endian::Little => <$t>::from_le_bytes(arr),
                    Endian::Big => <$t>::from_be_bytes(arr),
                }
            }
            fn write(self, endian: Endian, out: &mut Vec<u8>) {
                match endian {
                    Endian::Little => out.extend_from_slice(&self.to_le_bytes()),
                    Endian::Big => out.extend_from_slice(&self.to_be_bytes()),
                }
            }
        }
    };
}

int_sample!(u8, U8);
int_sample!(u16, U16);
int_sample!(u32, U32);
int_sample!(u64, U64);
int_sample!(i8, I8);
int_sample!(i16, I16);
int_sample!(i32, I32);
int_sample!(i64, I64);
int_sample!(i128, I128);
float_sample!(f32, F32);
float_sample!(f64, F64);

/// Typed sample storage.
#[derive(Clone, Debug, PartialEq)]
pub enum SampleData {
    U8(Vec<u8>),
    U16(Vec<u16>),
    U32(Vec<u32>),
    U64(Vec<u64>),
    I8(Vec<i8>),
    I16(Vec<i16>),
    I32(Vec<i32>),
    I64(Vec<i64>),
    I128(Vec<i128>),
    F32(Vec<f32>),
    F64(Vec<f64>),
}

/// Runs `$body` with `$s` bound to the typed sample slice.
macro_rules! with_samples {
    ($data:expr, |$s:ident| $body:expr) => {
        match $data {
            $crate::field::SampleData::U8($s) => $body,
            $crate::field::SampleData::U16($s) => $body,
            $crate::field::SampleData::U32($s) => $body,
            $crate::field::SampleData::U64($s) => $body,
            $crate::field::SampleData::I8($s) => $body,
            $crate::field::SampleData::I16($s) => $body,
            $crate::field::SampleData::I32($s) => $body,
            $crate::field::SampleData::I64($s) => $body,
            $crate::field::SampleData::I128($s) => $body,
            $crate::field::SampleData::F32($s) => $body,
            $crate::field::SampleData::F64($s) => $body,
        }
    };
}
pub(crate) use with_samples;

pub trait IntoSampleData: Sample {
    fn into_data(values: Vec<Self>) -> SampleData;
}

macro_rules! into_data {
    ($($t:ty => $v:ident),*) => {
        $(impl IntoSampleData for $t {
            fn into_data(values: Vec<Self>) -> SampleData {
                SampleData::$v(values)
            }
        })*
    };
}

into_data!(u8 => U8, u16 => U16, u32 => U32, u64 => U64, i8 => I8, i16 => I16,
    i32 => I32, i64 => I64, i128 => I128, f32 => F32, f64 => F64);

impl SampleData {
    pub fn len(&self) -> usize {
        with_samples!(self, |s| s.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dtype(&self) -> Dtype {
        fn dt<T: Sample>(_: &[T]) -> Dtype {
            T::DTYPE
        }
        with_samples!(self, |s| dt(s))
    }
}

/// Samples at the vertices of a grid, row-major with axis 0 fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    domain: GridDomain,
    data: SampleData,
}

impl ScalarField {
    pub fn new(domain: GridDomain, data: SampleData) -> Result<Self> {
        if data.len() != domain.len() {
            return Err(Error::invalid(format!(
                "{} samples for a grid of {} vertices",
                data.len(),
                domain.len()
            )));
        }
        fn all_finite<T: Sample>(s: &[T]) -> bool {
            s.iter().all(|x| x.is_finite())
        }
        if !with_samples!(&data, |s| all_finite(s)) {
            return Err(Error::invalid("field contains non-finite samples"));
        }
        Ok(ScalarField { domain, data })
    }

    pub fn from_vec<T: IntoSampleData>(dims: &[usize], values: Vec<T>) -> Result<Self> {
        ScalarField::new(GridDomain::new(dims)?, T::into_data(values))
    }

    /// Samples `f` at the integer coordinates of every vertex.
    pub fn from_fn(dims: &[usize], mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let domain = GridDomain::new(dims)?;
        let mut coords = vec![0; domain.ndim()];
        let values = (0..domain.len())
            .map(|i| {
                domain.coords_into(i, &mut coords);
                f(&coords)
            })
            .collect();
        ScalarField::new(domain, SampleData::F64(values))
    }

    #[inline]
    pub fn domain(&self) -> &GridDomain {
        &self.domain
    }

    #[inline]
    pub fn data(&self) -> &SampleData {
        &self.data
    }

    pub fn dtype(&self) -> Dtype {
        self.data.dtype()
    }

    pub fn value(&self, v: VertexId) -> Scalar {
        with_samples!(&self.data, |s| s[v.index()].to_scalar())
    }

    /// Global minimum and maximum sample.
    pub fn range(&self) -> (Scalar, Scalar) {
        fn minmax<T: Sample>(s: &[T]) -> (Scalar, Scalar) {
            let mut lo = s[0];
            let mut hi = s[0];
            for &x in &s[1..] {
                if x.cmp_sample(&lo) == Ordering::Less {
                    lo = x;
                }
                if x.cmp_sample(&hi) == Ordering::Greater {
                    hi = x;
                }
            }
            (lo.to_scalar(), hi.to_scalar())
        }
        with_samples!(&self.data, |s| minmax(s))
    }

    /// Simulated-perturbation order: values first, lower index is lower on ties.
    pub fn compare(&self, u: VertexId, v: VertexId) -> Result<Ordering> {
        self.domain.check(u)?;
        self.domain.check(v)?;
        if u == v {
            return Err(Error::invalid(format!(
                "cannot order vertex {u} against itself"
            )));
        }
        Ok(with_samples!(&self.data, |s| perturbed_cmp(s, u.index(), v.index())))
    }

    /// The field with every sample negated. Integer types are promoted when
    /// negation would overflow them (unsigned types always are).
    pub fn negate(&self) -> ScalarField {
        let data = match &self.data {
            SampleData::U8(s) => SampleData::I16(s.iter().map(|&x| -(x as i16)).collect()),
            SampleData::U16(s) => SampleData::I32(s.iter().map(|&x| -(x as i32)).collect()),
            SampleData::U32(s) => SampleData::I64(s.iter().map(|&x| -(x as i64)).collect()),
            SampleData::U64(s) => SampleData::I128(s.iter().map(|&x| -(x as i128)).collect()),
            SampleData::I8(s) => negate_signed(s, |x: i8| x.checked_neg(), |x| -(x as i16), SampleData::I8, SampleData::I16),
            SampleData::I16(s) => negate_signed(s, |x: i16| x.checked_neg(), |x| -(x as i32), SampleData::I16, SampleData::I32),
            SampleData::I32(s) => negate_signed(s, |x: i32| x.checked_neg(), |x| -(x as i64), SampleData::I32, SampleData::I64),
            SampleData::I64(s) => negate_signed(s, |x: i64| x.checked_neg(), |x| -(x as i128), SampleData::I64, SampleData::I128),
            SampleData::I128(s) => {
                if s.contains(&i128::MIN) {
                    // No wider integer; i128 only arises from 64-bit sources,
                    // which never reach i128::MIN.
                    SampleData::F64(s.iter().map(|&x| -(x as f64)).collect())
                } else {
                    SampleData::I128(s.iter().map(|&x| -x).collect())
                }
            }
            SampleData::F32(s) => SampleData::F32(s.iter().map(|&x| 0.0 - x).collect()),
            SampleData::F64(s) => SampleData::F64(s.iter().map(|&x| 0.0 - x).collect()),
        };
        ScalarField {
            domain: self.domain.clone(),
            data,
        }
    }

    /// Reads a headerless raw volume.
    pub fn load_raw(path: impl AsRef<Path>, dims: &[usize], dtype: Dtype, endian: Endian) -> Result<Self> {
        let path = path.as_ref();
        let domain = GridDomain::new(dims)?;
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let expected = domain.len() as u64 * dtype.size() as u64;
        if bytes.len() as u64 != expected {
            return Err(Error::SizeMismatch {
                path: path.to_path_buf(),
                expected,
                actual: bytes.len() as u64,
            });
        }
        let data = decode(&bytes, dtype, endian);
        ScalarField::new(domain, data).map_err(|e| match e {
            Error::InvalidArgument(m) => Error::Format(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Raw byte image of the samples.
    pub fn to_raw_bytes(&self, endian: Endian) -> Vec<u8> {
        fn enc<T: Sample>(s: &[T], endian: Endian) -> Vec<u8> {
            let mut out = Vec::with_capacity(s.len() * T::SIZE);
            for &x in s {
                x.write(endian, &mut out);
            }
            out
        }
        with_samples!(&self.data, |s| enc(s, endian))
    }

    pub fn write_raw(&self, path: impl AsRef<Path>, endian: Endian) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_raw_bytes(endian)).map_err(|e| Error::io(path, e))
    }
}

fn negate_signed<T: Copy, W>(
    s: &[T],
    checked: impl Fn(T) -> Option<T>,
    widen: impl Fn(T) -> W,
    same: fn(Vec<T>) -> SampleData,
    wider: fn(Vec<W>) -> SampleData,
) -> SampleData {
    match s.iter().map(|&x| checked(x)).collect::<Option<Vec<T>>>() {
        Some(v) => same(v),
        None => wider(s.iter().map(|&x| widen(x)).collect()),
    }
}

fn decode(bytes: &[u8], dtype: Dtype, endian: Endian) -> SampleData {
    fn dec<T: IntoSampleData>(bytes: &[u8], endian: Endian) -> SampleData {
        T::into_data(bytes.chunks_exact(T::SIZE).map(|c| T::read(c, endian)).collect())
    }
    match dtype {
        Dtype::U8 => dec::<u8>(bytes, endian),
        Dtype::U16 => dec::<u16>(bytes, endian),
        Dtype::U32 => dec::<u32>(bytes, endian),
        Dtype::U64 => dec::<u64>(bytes, endian),
        Dtype::I8 => dec::<i8>(bytes, endian),
        Dtype::I16 => dec::<i16>(bytes, endian),
        Dtype::I32 => dec::<i32>(bytes, endian),
        Dtype::I64 => dec::<i64>(bytes, endian),
        Dtype::I128 => dec::<i128>(bytes, endian),
        Dtype::F32 => dec::<f32>(bytes, endian),
        Dtype::F64 => dec::<f64>(bytes, endian),
    }
}

/// Perturbed comparison of two vertices of a sample slice.
#[inline]
pub(crate) fn perturbed_cmp<T: Sample>(s: &[T], u: usize, v: usize) -> Ordering {
    s[u].cmp_sample(&s[v]).then(u.cmp(&v))
}

/// Whether `(a, ia)` is above `(b, ib)` in the perturbed order.
#[inline(always)]
pub(crate) fn above<T: Sample>(a: T, ia: usize, b: T, ib: usize) -> bool {
    match a.cmp_sample(&b) {
        Ordering::Greater => true,
        Ordering::Less => false,
        Ordering::Equal => ia > ib,
    }
}

/// Conventional per-axis domain of the Schwefel function.
pub const SCHWEFEL_BOUNDS: (f64, f64) = (-500.0, 500.0);

/// Schwefel function `418.9829 n - sum x_i sin(sqrt|x_i|)`.
pub fn schwefel(x: &[f64]) -> f64 {
    418.9829 * x.len() as f64 - x.iter().map(|&xi| xi * xi.abs().sqrt().sin()).sum::<f64>()
}

/// Samples the Schwefel function on a regular lattice spanning `[lo, hi]` per axis.
pub fn sample_schwefel(dims: &[usize], lo: &[f64], hi: &[f64]) -> Result<ScalarField> {
    if lo.len() != dims.len() || hi.len() != dims.len() {
        return Err(Error::invalid(format!(
            "bounds have {} / {} entries for {} axes",
            lo.len(),
            hi.len(),
            dims.len()
        )));
    }
    if let Some(axis) = dims.iter().position(|&d| d < 2) {
        return Err(Error::invalid(format!(
            "axis {axis} needs at least 2 samples, got {}",
            dims[axis]
        )));
    }
    if let Some(axis) = (0..dims.len()).find(|&i| !(lo[i] < hi[i])) {
        return Err(Error::invalid(format!(
            "axis {axis}: lower bound {} is not below upper bound {}",
            lo[axis], hi[axis]
        )));
    }
    let step: Vec<f64> = (0..dims.len())
        .map(|i| (hi[i] - lo[i]) / (dims[i] - 1) as f64)
        .collect();
    let mut x = vec![0.0; dims.len()];
    ScalarField::from_fn(dims, |c| {
        for i in 0..c.len() {
            x[i] = lo[i] + c[i] as f64 * step[i];
        }
        schwefel(&x)
    })
}

/// [`sample_schwefel`] over the conventional `[-500, 500]` box.
pub fn schwefel_field(dims: &[usize]) -> Result<ScalarField> {
    let n = dims.len();
    sample_schwefel(dims, &vec![SCHWEFEL_BOUNDS.0; n], &vec![SCHWEFEL_BOUNDS.1; n])
}
