//! C interface to `cclhmm`.
//!
//! Every function returns a [`CclStatus`]; results come back through out
//! pointers. Objects are opaque handles released with the matching `_free`
//! function. After a non-OK status, [`ccl_last_error_message`] describes the
//! failure on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use cclhmm::data::{ObservationDataset, Sequence};
use cclhmm::eval::{fit_model, scaled_log_likelihood, ModelSpec};
use cclhmm::model::{complete_dataset, FittedModel, ModelFamily, ModelFile, SequenceModel};
use cclhmm::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Cell value marking a missing observation.
pub const CCL_MISSING: u8 = 255;

const _: () = assert!(CCL_MISSING == cclhmm::data::MISSING);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CclStatus {
    Ok = 0,
    NullPointer = 1,
    Usage = 2,
    Data = 3,
    Numerical = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CclFamily {
    Chains = 0,
    Cclf = 1,
    HmmCi = 2,
    HmmCl = 3,
    HmmCcl = 4,
}

impl From<CclFamily> for ModelFamily {
    fn from(f: CclFamily) -> Self {
        match f {
            CclFamily::Chains => ModelFamily::Chains,
            CclFamily::Cclf => ModelFamily::Cclf,
            CclFamily::HmmCi => ModelFamily::HmmCi,
            CclFamily::HmmCl => ModelFamily::HmmCl,
            CclFamily::HmmCcl => ModelFamily::HmmCcl,
        }
    }
}

/// Training options. `num_states` is ignored for non-HMM families.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CclFitOptions {
    pub family: CclFamily,
    pub num_states: usize,
    pub smoothing: f64,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub restarts: usize,
    pub seed: u64,
}

/// A growable set of sequences with fixed `num_vars` and `cardinality`.
pub struct CclDataset {
    num_vars: usize,
    cardinality: usize,
    sequences: Vec<Sequence>,
}

pub struct CclModel {
    file: ModelFile,
    model: FittedModel,
}

impl CclDataset {
    fn from_dataset(d: ObservationDataset) -> Self {
        CclDataset {
            num_vars: d.num_vars(),
            cardinality: d.cardinality(),
            sequences: d.into_sequences(),
        }
    }

    fn dataset(&self) -> Result<ObservationDataset, Failure> {
        Ok(ObservationDataset::new(self.num_vars, self.cardinality, self.sequences.clone())?)
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(CclStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Config(_) => CclStatus::Usage,
            Error::Numerical(_) | Error::DegenerateTable(_) => CclStatus::Numerical,
            _ => CclStatus::Data,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(CclStatus::NullPointer, format!("{what} is null"))
}

fn usage(message: impl Into<String>) -> Failure {
    Failure(CclStatus::Usage, message.into())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CclStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CclStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            CclStatus::Panic
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn borrow_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn path_arg<'a>(p: *const c_char) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(p).to_str().map_err(|_| usage("path is not valid UTF-8"))
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(value);
    Ok(())
}

/// Message for the last failed call on this thread, or null. The pointer
/// stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn ccl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Creates an empty dataset.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ccl_dataset_new(num_vars: usize, cardinality: usize, out: *mut *mut CclDataset) -> CclStatus {
    guard(|| {
        if num_vars == 0 || !(2..CCL_MISSING as usize).contains(&cardinality) {
            return Err(usage("need num_vars >= 1 and 2 <= cardinality < 255"));
        }
        let ds = Box::new(CclDataset {
            num_vars,
            cardinality,
            sequences: Vec::new(),
        });
        write_out(out, Box::into_raw(ds))
    })
}

/// Reads a dataset in the text format.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ccl_dataset_load(path: *const c_char, out: *mut *mut CclDataset) -> CclStatus {
    guard(|| {
        let d = ObservationDataset::load(path_arg(path)?)?;
        write_out(out, Box::into_raw(Box::new(CclDataset::from_dataset(d))))
    })
}

/// Writes a dataset in the text format.
///
/// # Safety
/// `ds` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ccl_dataset_save(ds: *const CclDataset, path: *const c_char) -> CclStatus {
    guard(|| {
        let ds = borrow(ds, "dataset")?;
        ds.dataset()?.save(path_arg(path)?)?;
        Ok(())
    })
}

/// Appends one sequence of `length` slices; `cells` holds `length * num_vars`
/// values in time-major order, with [`CCL_MISSING`] for missing cells.
///
/// # Safety
/// `ds` must be a live handle and `cells` must point to `length * num_vars` bytes.
#[no_mangle]
pub unsafe extern "C" fn ccl_dataset_push_sequence(ds: *mut CclDataset, cells: *const u8, length: usize) -> CclStatus {
    guard(|| {
        let ds = borrow_mut(ds, "dataset")?;
        if cells.is_null() {
            return Err(null("cells"));
        }
        let n = length
            .checked_mul(ds.num_vars)
            .ok_or_else(|| usage("sequence is too long"))?;
        let cells = std::slice::from_raw_parts(cells, n).to_vec();
        if let Some(&bad) = cells.iter().find(|&&c| c != CCL_MISSING && c as usize >= ds.cardinality) {
            return Err(Failure(
                CclStatus::Data,
                format!("value {bad} outside 0..{}", ds.cardinality),
            ));
        }
        ds.sequences.push(Sequence::new(ds.num_vars, cells)?);
        Ok(())
    })
}

/// # Safety
/// `ds` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ccl_dataset_num_sequences(ds: *const CclDataset, out: *mut usize) -> CclStatus {
    guard(|| write_out(out, borrow(ds, "dataset")?.sequences.len()))
}

/// Number of slices in sequence `index`.
///
/// # Safety
/// `ds` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ccl_dataset_sequence_length(ds: *const CclDataset, index: usize, out: *mut usize) -> CclStatus {
    guard(|| {
        let ds = borrow(ds, "dataset")?;
        let seq = ds.sequences.get(index).ok_or_else(|| usage("sequence index out of range"))?;
        write_out(out, seq.len())
    })
}

/// Copies sequence `index` into `cells`, which must hold `capacity` bytes.
///
/// # Safety
/// `ds` must be a live handle and `cells` must point to `capacity` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn ccl_dataset_copy_sequence(
    ds: *const CclDataset,
    index: usize,
    cells: *mut u8,
    capacity: usize,
) -> CclStatus {
    guard(|| {
        let ds = borrow(ds, "dataset")?;
        let seq = ds.sequences.get(index).ok_or_else(|| usage("sequence index out of range"))?;
        if cells.is_null() {
            return Err(null("cells"));
        }
        let src = seq.cells();
        if capacity < src.len() {
            return Err(usage(format!("buffer holds {capacity} cells, need {}", src.len())));
        }
        ptr::copy_nonoverlapping(src.as_ptr(), cells, src.len());
        Ok(())
    })
}

/// # Safety
/// `ds` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ccl_dataset_free(ds: *mut CclDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Library defaults for `family`.
#[no_mangle]
pub extern "C" fn ccl_fit_options_default(family: CclFamily) -> CclFitOptions {
    let spec = ModelSpec::new(family.into());
    CclFitOptions {
        family,
        num_states: spec.num_states.unwrap_or(0),
        smoothing: spec.smoothing,
        max_iterations: spec.max_iterations,
        tolerance: spec.tolerance,
        restarts: spec.restarts,
        seed: 0,
    }
}

/// Fits a model to `ds`.
///
/// # Safety
/// `ds` must be a live handle, `options` and `out` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn ccl_model_fit(
    ds: *const CclDataset,
    options: *const CclFitOptions,
    out: *mut *mut CclModel,
) -> CclStatus {
    guard(|| {
        let ds = borrow(ds, "dataset")?;
        let o = *borrow(options, "options")?;
        if out.is_null() {
            return Err(null("output pointer"));
        }
        let data = ds.dataset()?;
        let family: ModelFamily = o.family.into();
        let mut spec = if family.is_hmm() {
            ModelSpec::hmm(family, o.num_states)
        } else {
            ModelSpec::new(family)
        };
        spec.smoothing = o.smoothing;
        spec.max_iterations = o.max_iterations;
        spec.tolerance = o.tolerance;
        spec.restarts = o.restarts;
        spec.validate()?;
        let (model, training) = fit_model(&spec, &data, o.seed)?;
        let file = ModelFile::new(&model, training)?;
        write_out(out, Box::into_raw(Box::new(CclModel { file, model })))
    })
}

/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ccl_model_load(path: *const c_char, out: *mut *mut CclModel) -> CclStatus {
    guard(|| {
        let file = ModelFile::load(path_arg(path)?)?;
        let model = file.model()?;
        write_out(out, Box::into_raw(Box::new(CclModel { file, model })))
    })
}

/// # Safety
/// `model` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ccl_model_save(model: *const CclModel, path: *const c_char) -> CclStatus {
    guard(|| {
        borrow(model, "model")?.file.save(path_arg(path)?)?;
        Ok(())
    })
}

/// Number of hidden states, or 0 for the non-HMM families.
///
/// # Safety
/// `model` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ccl_model_num_states(model: *const CclModel, out: *mut usize) -> CclStatus {
    guard(|| write_out(out, borrow(model, "model")?.model.num_states().unwrap_or(0)))
}

/// Log-likelihood of `ds` per observed cell, in nats.
///
/// # Safety
/// `model` and `ds` must be live handles and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ccl_model_scaled_log_likelihood(
    model: *const CclModel,
    ds: *const CclDataset,
    out: *mut f64,
) -> CclStatus {
    guard(|| {
        let model = borrow(model, "model")?;
        let data = borrow(ds, "dataset")?.dataset()?;
        write_out(out, scaled_log_likelihood(&model.model, &data)?)
    })
}

/// Draws `num_sequences` sequences of `length` slices.
///
/// # Safety
/// `model` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ccl_model_simulate(
    model: *const CclModel,
    num_sequences: usize,
    length: usize,
    seed: u64,
    out: *mut *mut CclDataset,
) -> CclStatus {
    guard(|| {
        let model = borrow(model, "model")?;
        if num_sequences == 0 || length == 0 {
            return Err(usage("num_sequences and length must be positive"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = model.model.sample(&vec![length; num_sequences], &mut rng)?;
        write_out(out, Box::into_raw(Box::new(CclDataset::from_dataset(d))))
    })
}

/// Returns a copy of `ds` with every missing cell set to its most probable value.
///
/// # Safety
/// `model` and `ds` must be live handles and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ccl_model_impute(
    model: *const CclModel,
    ds: *const CclDataset,
    out: *mut *mut CclDataset,
) -> CclStatus {
    guard(|| {
        let model = borrow(model, "model")?;
        let data = borrow(ds, "dataset")?.dataset()?;
        let imputed = model.model.impute(&data)?;
        let done = complete_dataset(&data, &imputed)?;
        write_out(out, Box::into_raw(Box::new(CclDataset::from_dataset(done))))
    })
}

/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ccl_model_free(model: *mut CclModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}
