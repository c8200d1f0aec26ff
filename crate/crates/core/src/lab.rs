//! Shared evaluation context: the prime/rank pair plus memo tables.

use std::collections::{BTreeMap, HashMap};
use std::hash::Hash;
use std::sync::{Arc, RwLock};

use crate::coweight::DominantCoweight;
use crate::cosets::CosetList;
use crate::error::Result;
use crate::padic::PrimeContext;
use crate::spherical::IwasawaProfile;

pub const DEFAULT_COSET_CAP: u128 = 1_000_000;

/// Concurrent memo keyed by `K`. Distinct keys may be inserted from several
/// threads; a racing duplicate computation keeps the first stored value.
pub(crate) struct Memo<K, V> {
    map: RwLock<HashMap<K, Arc<V>>>,
}

impl<K: Eq + Hash + Clone, V> Memo<K, V> {
    pub(crate) fn new() -> Self {
        Memo { map: RwLock::new(HashMap::new()) }
    }

    pub(crate) fn get_or_try_insert(&self, key: &K, compute: impl FnOnce() -> Result<V>) -> Result<Arc<V>> {
        if let Some(v) = self.map.read().expect("memo lock poisoned").get(key) {
            return Ok(Arc::clone(v));
        }
        let value = Arc::new(compute()?);
        let mut w = self.map.write().expect("memo lock poisoned");
        Ok(Arc::clone(w.entry(key.clone()).or_insert(value)))
    }

    pub(crate) fn len(&self) -> usize {
        self.map.read().expect("memo lock poisoned").len()
    }
}

pub type StructureConstants = BTreeMap<DominantCoweight, u64>;

/// Everything that is computed once per `(n, p, m)` and reused.
pub struct Lab {
    ctx: PrimeContext,
    coset_cap: u128,
    pub(crate) cosets: Memo<DominantCoweight, CosetList>,
    pub(crate) profiles: Memo<DominantCoweight, IwasawaProfile>,
    pub(crate) structure: Memo<(DominantCoweight, DominantCoweight), StructureConstants>,
}

impl Lab {
    pub fn new(ctx: PrimeContext) -> Self {
        Self::with_cap(ctx, DEFAULT_COSET_CAP)
    }

    pub fn with_cap(ctx: PrimeContext, coset_cap: u128) -> Self {
        Lab {
            ctx,
            coset_cap,
            cosets: Memo::new(),
            profiles: Memo::new(),
            structure: Memo::new(),
        }
    }

    pub fn ctx(&self) -> &PrimeContext {
        &self.ctx
    }

    pub fn coset_cap(&self) -> u128 {
        self.coset_cap
    }

    pub fn cached_coset_lists(&self) -> usize {
        self.cosets.len()
    }
}

impl std::fmt::Debug for Lab {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Lab").field("ctx", &self.ctx).field("coset_cap", &self.coset_cap).finish()
    }
}
