//! C interface to the grammar, mapping, network and fitness routines.
//!
//! Objects are opaque handles created by `*_parse` and released with the
//! matching `*_free`. Every fallible call returns a [`DsgeStatus`]; on
//! failure [`dsge_last_error`] describes the problem. Strings returned
//! through out-parameters are owned by the caller and must be released
//! with [`dsge_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use dsge::genotype::{map_genotype, Genotype, MappingOptions, MaxDepths};
use dsge::grammar::Grammar;
use dsge::metrics::{fitness, Predictions};
use dsge::network::{parse_phenotype, NetworkSpec};
use dsge::Error;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DsgeStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Grammar = 3,
    Genotype = 4,
    RepairNeeded = 5,
    Phenotype = 6,
    DimensionMismatch = 7,
    InvalidArgument = 8,
    Panic = 9,
}

/// A parsed grammar.
pub struct DsgeGrammar(Grammar);

/// A parsed network.
pub struct DsgeNetwork(NetworkSpec);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: impl Into<String>) {
    let text = CString::new(message.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = text);
}

fn status_of(err: &Error) -> DsgeStatus {
    match err {
        Error::GrammarSyntax { .. } | Error::UndefinedNonTerminal(_) | Error::NoTerminalExpansion(_) => {
            DsgeStatus::Grammar
        }
        Error::MalformedGenotype(_) | Error::DerivationTooLong(_) | Error::UnknownNonTerminal(_) => {
            DsgeStatus::Genotype
        }
        Error::RepairNeeded(_) => DsgeStatus::RepairNeeded,
        Error::Phenotype { .. } => DsgeStatus::Phenotype,
        Error::DimensionMismatch { .. } => DsgeStatus::DimensionMismatch,
        _ => DsgeStatus::InvalidArgument,
    }
}

struct Failure(DsgeStatus, String);

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        Failure(status_of(&err), err.to_string())
    }
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> DsgeStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_error("");
            DsgeStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic");
            DsgeStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(DsgeStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(DsgeStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

fn null(what: &str) -> Failure {
    Failure(DsgeStatus::NullPointer, format!("{what} is null"))
}

fn owned_string(s: String) -> *mut c_char {
    CString::new(s).map_or(ptr::null_mut(), CString::into_raw)
}

/// Message for the most recent failed call on this thread. Empty after a
/// successful call. Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn dsge_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn dsge_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Release a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn dsge_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parse BNF grammar text.
///
/// # Safety
/// `source` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dsge_grammar_parse(source: *const c_char, out: *mut *mut DsgeGrammar) -> DsgeStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let grammar = Grammar::parse(text(source, "source")?)?;
        *out = Box::into_raw(Box::new(DsgeGrammar(grammar)));
        Ok(())
    })
}

/// # Safety
/// `grammar` must come from [`dsge_grammar_parse`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn dsge_grammar_free(grammar: *mut DsgeGrammar) {
    if !grammar.is_null() {
        drop(Box::from_raw(grammar));
    }
}

/// Number of nonterminals, or 0 for a null handle.
///
/// # Safety
/// `grammar` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dsge_grammar_nonterminal_count(grammar: *const DsgeGrammar) -> usize {
    grammar.as_ref().map_or(0, |g| g.0.len())
}

/// Map a genotype in nested-list text form to its phenotype.
///
/// `max_depths` may be null for no limits. When `use_seed` is false any
/// needed repair fails with `DSGE_STATUS_REPAIR_NEEDED`. If
/// `out_genotype` is not null it receives the possibly repaired genotype.
///
/// # Safety
/// String arguments must be NUL-terminated; `grammar` must be live;
/// `out_phenotype` must be valid; `out_genotype` may be null.
#[no_mangle]
pub unsafe extern "C" fn dsge_map_genotype(
    grammar: *const DsgeGrammar,
    genotype: *const c_char,
    max_depths: *const c_char,
    n_features: usize,
    n_outputs: usize,
    use_seed: bool,
    seed: u64,
    out_phenotype: *mut *mut c_char,
    out_genotype: *mut *mut c_char,
) -> DsgeStatus {
    guard(|| {
        let grammar = &grammar.as_ref().ok_or_else(|| null("grammar"))?.0;
        if out_phenotype.is_null() {
            return Err(null("out_phenotype"));
        }
        let mut geno = Genotype::from_text(grammar, text(genotype, "genotype")?)?;
        let depths: MaxDepths = if max_depths.is_null() {
            MaxDepths::new()
        } else {
            text(max_depths, "max_depths")?.parse()?
        };
        let opts = MappingOptions {
            n_outputs,
            ..MappingOptions::new(n_features)
        };
        let mut rng = use_seed.then(|| ChaCha8Rng::seed_from_u64(seed));
        let rng = rng.as_mut().map(|r| r as &mut dyn RngCore);
        let mapping = map_genotype(&mut geno, grammar, &depths, &opts, rng)?;
        *out_phenotype = owned_string(mapping.phenotype);
        if !out_genotype.is_null() {
            *out_genotype = owned_string(geno.to_text());
        }
        Ok(())
    })
}

/// Parse a phenotype string over `n_inputs` features.
///
/// # Safety
/// `phenotype` must be NUL-terminated and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dsge_network_parse(
    phenotype: *const c_char,
    n_inputs: usize,
    out: *mut *mut DsgeNetwork,
) -> DsgeStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let net = parse_phenotype(text(phenotype, "phenotype")?, n_inputs)?;
        *out = Box::into_raw(Box::new(DsgeNetwork(net)));
        Ok(())
    })
}

/// # Safety
/// `network` must come from [`dsge_network_parse`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn dsge_network_free(network: *mut DsgeNetwork) {
    if !network.is_null() {
        drop(Box::from_raw(network));
    }
}

/// Number of output neurons, or 0 for a null handle.
///
/// # Safety
/// `network` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dsge_network_output_count(network: *const DsgeNetwork) -> usize {
    network.as_ref().map_or(0, |n| n.0.outputs.len())
}

/// Evaluate the network on one input vector, writing one value per
/// output neuron into `outputs` (capacity `outputs_len`).
///
/// # Safety
/// `inputs` must point to `inputs_len` doubles and `outputs` to
/// `outputs_len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn dsge_network_forward(
    network: *const DsgeNetwork,
    inputs: *const f64,
    inputs_len: usize,
    outputs: *mut f64,
    outputs_len: usize,
) -> DsgeStatus {
    guard(|| {
        let net = &network.as_ref().ok_or_else(|| null("network"))?.0;
        if inputs.is_null() || outputs.is_null() {
            return Err(null("inputs or outputs"));
        }
        if outputs_len < net.outputs.len() {
            return Err(Failure(
                DsgeStatus::InvalidArgument,
                format!("outputs holds {outputs_len} values, network has {}", net.outputs.len()),
            ));
        }
        let y = net.forward(std::slice::from_raw_parts(inputs, inputs_len))?;
        std::slice::from_raw_parts_mut(outputs, y.len()).copy_from_slice(&y);
        Ok(())
    })
}

/// Product over both classes of `exp(per-class RMSE)`.
///
/// # Safety
/// `confidences` and `targets` must each point to `len` values and `out`
/// must be valid.
#[no_mangle]
pub unsafe extern "C" fn dsge_fitness(
    confidences: *const f64,
    targets: *const u8,
    len: usize,
    out: *mut f64,
) -> DsgeStatus {
    guard(|| {
        if confidences.is_null() || targets.is_null() || out.is_null() {
            return Err(null("argument"));
        }
        let preds = Predictions::new(
            std::slice::from_raw_parts(confidences, len).to_vec(),
            std::slice::from_raw_parts(targets, len).to_vec(),
        )?;
        *out = fitness(&preds, 2)?;
        Ok(())
    })
}
