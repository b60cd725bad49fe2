//! Read-mostly memo table keyed by integer vectors. With `std` it is
//! guarded by a reader-writer lock and can be shared across workers.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

#[cfg(feature = "std")]
pub(crate) struct Memo<V> {
    map: std::sync::RwLock<BTreeMap<Vec<i64>, V>>,
}

#[cfg(feature = "std")]
impl<V: Copy> Memo<V> {
    pub fn new() -> Self {
        Memo {
            map: std::sync::RwLock::new(BTreeMap::new()),
        }
    }

    pub fn get(&self, key: &[i64]) -> Option<V> {
        self.map
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .get(key)
            .copied()
    }

    pub fn insert(&self, key: Vec<i64>, value: V) {
        self.map
            .write()
            .unwrap_or_else(|e| e.into_inner())
            .insert(key, value);
    }
}

#[cfg(not(feature = "std"))]
pub(crate) struct Memo<V> {
    map: core::cell::RefCell<BTreeMap<Vec<i64>, V>>,
}

#[cfg(not(feature = "std"))]
impl<V: Copy> Memo<V> {
    pub fn new() -> Self {
        Memo {
            map: core::cell::RefCell::new(BTreeMap::new()),
        }
    }

    pub fn get(&self, key: &[i64]) -> Option<V> {
        self.map.borrow().get(key).copied()
    }

    pub fn insert(&self, key: Vec<i64>, value: V) {
        self.map.borrow_mut().insert(key, value);
    }
}
