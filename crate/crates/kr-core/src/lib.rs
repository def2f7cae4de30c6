//! Exact computation of sl(N) Khovanov-Rozansky homology for 2-braids and
//! their closures (torus links T(2,n)), in the generic, equivariant and
//! deformed potentials, together with the sl(N) Rasmussen invariants of
//! T(2,n) knots and the (2,2k+1)-cable recursion layer.

pub mod field;
pub mod ring;
pub mod mf;

pub mod par {
    //! Thin switch between rayon and sequential execution. The `parallel`
    //! feature (default) routes `map_collect` through rayon; benches compare
    //! both paths explicitly.

    /// Sequential map, always available.
    pub fn map_collect_seq<T: Send, U: Send>(
        items: Vec<T>,
        f: impl Fn(T) -> U + Sync + Send,
    ) -> Vec<U> {
        items.into_iter().map(f).collect()
    }

    #[cfg(feature = "parallel")]
    pub fn map_collect<T: Send, U: Send>(
        items: Vec<T>,
        f: impl Fn(T) -> U + Sync + Send,
    ) -> Vec<U> {
        use rayon::prelude::*;
        items.into_par_iter().map(f).collect()
    }

    #[cfg(not(feature = "parallel"))]
    pub fn map_collect<T: Send, U: Send>(
        items: Vec<T>,
        f: impl Fn(T) -> U + Sync + Send,
    ) -> Vec<U> {
        map_collect_seq(items, f)
    }
}
