//! Data-parallel map over independent work items.
//!
//! With the `parallel` feature the map fans out over the rayon pool; without
//! it (or with `Config::parallel == false`) it runs on the calling thread.
//! Output order always matches input order.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

pub fn map<T, R, F>(parallel: bool, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel && items.len() > 1 {
        return items.par_iter().map(f).collect();
    }
    let _ = parallel;
    items.iter().map(f).collect()
}

pub fn try_map<T, R, E, F>(parallel: bool, items: &[T], f: F) -> Result<Vec<R>, E>
where
    T: Sync,
    R: Send,
    E: Send,
    F: Fn(&T) -> Result<R, E> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel && items.len() > 1 {
        return items.par_iter().map(f).collect();
    }
    let _ = parallel;
    items.iter().map(f).collect()
}

pub fn enabled() -> bool {
    cfg!(feature = "parallel")
}

#[cfg(test)]
mod tests {
    #[test]
    fn order_is_preserved() {
        let xs: Vec<u64> = (0..1000).collect();
        let a = super::map(true, &xs, |x| x * x);
        let b = super::map(false, &xs, |x| x * x);
        assert_eq!(a, b);
    }

    #[test]
    fn first_error_in_order_wins_sequentially() {
        let xs = [1, 2, 3];
        let r: Result<Vec<i32>, i32> = super::try_map(false, &xs, |&x| if x >= 2 { Err(x) } else { Ok(x) });
        assert_eq!(r, Err(2));
    }
}
