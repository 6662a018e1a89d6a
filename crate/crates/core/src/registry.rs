//! Name-keyed factories for runtime-selectable strategies.

use std::collections::BTreeMap;

use crate::error::{Result, TogeError};

pub type Factory<A, T> = fn(&A) -> Box<T>;

pub struct Registry<A, T: ?Sized> {
    kind: &'static str,
    entries: BTreeMap<&'static str, Factory<A, T>>,
}

impl<A, T: ?Sized> Registry<A, T> {
    pub fn new(kind: &'static str) -> Self {
        Registry {
            kind,
            entries: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, name: &'static str, factory: Factory<A, T>) -> &mut Self {
        self.entries.insert(name, factory);
        self
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.keys().copied().collect()
    }

    pub fn build(&self, name: &str, args: &A) -> Result<Box<T>> {
        match self.entries.get(name) {
            Some(f) => Ok(f(args)),
            None => Err(TogeError::Unsupported(format!(
                "unknown {} '{}' (known: {})",
                self.kind,
                name,
                self.names().join(", ")
            ))),
        }
    }
}
