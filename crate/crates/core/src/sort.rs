//! Linear-time integer-key sorting used by the merge engine.

/// Stable counting sort of `items` by `key(item) < key_bound`.
pub fn counting_sort_by_key<T: Copy, F>(items: &[T], key_bound: usize, key: F) -> Vec<T>
where
    F: Fn(&T) -> usize,
{
    let mut out = Vec::with_capacity(items.len());
    counting_sort_into(items, key_bound, key, &mut out);
    out
}

/// Like [`counting_sort_by_key`], writing into a reusable buffer.
/// Returns the bucket start offsets (length `key_bound + 1`).
pub fn counting_sort_into<T: Copy, F>(
    items: &[T],
    key_bound: usize,
    key: F,
    out: &mut Vec<T>,
) -> Vec<usize>
where
    F: Fn(&T) -> usize,
{
    let mut starts = vec![0usize; key_bound + 1];
    for it in items {
        starts[key(it) + 1] += 1;
    }
    for i in 1..starts.len() {
        starts[i] += starts[i - 1];
    }
    out.clear();
    if items.is_empty() {
        return starts;
    }
    // Every slot is overwritten below; seed with a valid value.
    out.resize(items.len(), items[0]);
    let mut next = starts.clone();
    for it in items {
        let k = key(it);
        out[next[k]] = *it;
        next[k] += 1;
    }
    starts
}

/// Sorts `(a, b)` pairs lexicographically with two stable counting passes.
pub fn lexicographic_pairs<T: Copy, F>(items: &[T], key_bound: usize, pair: F) -> Vec<T>
where
    F: Fn(&T) -> (usize, usize),
{
    let by_second = counting_sort_by_key(items, key_bound, |it| pair(it).1);
    counting_sort_by_key(&by_second, key_bound, |it| pair(it).0)
}
