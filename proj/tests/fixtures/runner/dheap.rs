//! A d-ary min-heap priority queue with value-addressable items.

use std::collections::HashMap;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Item {
    pub value: i64,
    pub priority: i64,
}

impl Item {
    pub fn new(value: i64, priority: i64) -> Self {
        Item { value, priority }
    }
}

pub struct DHeap {
    d: usize,
    items: Vec<Item>,
    slots: HashMap<i64, usize>,
}

impl DHeap {
    /// Panics if `d < 2`.
    pub fn new(d: usize) -> Self {
        assert!(d >= 2, "d must be at least 2");
        DHeap {
            d,
            items: Vec::new(),
            slots: HashMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn contains(&self, value: i64) -> bool {
        self.slots.contains_key(&value)
    }

    pub fn insert(&mut self, item: Item) {
        self.items.push(item);
        let slot = self.items.len() - 1;
        self.slots.insert(self.items[slot].value, slot);
        self.sift_up(slot);
    }

    pub fn front(&self) -> Option<&Item> {
        self.items.first()
    }

    pub fn pop(&mut self) -> Option<Item> {
        if self.items.is_empty() {
            return None;
        }
        let last = self.items.len() - 1;
        self.items.swap(0, last);
        let top = self.items.pop().expect("non-empty");
        self.slots.remove(&top.value);
        if !self.items.is_empty() {
            self.slots.insert(self.items[0].value, 0);
            self.sift_down(0);
        }
        Some(top)
    }

    /// Lower an item's priority number (promote it). Returns false when the
    /// value is absent or the new priority is not a decrease.
    pub fn decrease_priority(&mut self, value: i64, new_priority: i64) -> bool {
        match self.slots.get(&value).copied() {
            Some(slot) if new_priority < self.items[slot].priority => {
                self.items[slot].priority = new_priority;
                self.sift_up(slot);
                true
            }
            _ => false,
        }
    }

    /// Raise an item's priority number (demote it). Returns false when the
    /// value is absent or the new priority is not an increase.
    pub fn increase_priority(&mut self, value: i64, new_priority: i64) -> bool {
        match self.slots.get(&value).copied() {
            Some(slot) if new_priority > self.items[slot].priority => {
                self.items[slot].priority = new_priority;
                self.sift_down(slot);
                true
            }
            _ => false,
        }
    }

    pub fn summary(&self) -> String {
        match self.front() {
            None => format!("DHeap(d={}): empty", self.d),
            Some(front) => format!(
                "DHeap(d={}): {} item(s), front=Item({}, {})",
                self.d,
                self.items.len(),
                front.value,
                front.priority
            ),
        }
    }

    fn swap_slots(&mut self, a: usize, b: usize) {
        self.items.swap(a, b);
        self.slots.insert(self.items[a].value, a);
        self.slots.insert(self.items[b].value, b);
    }

    fn sift_up(&mut self, mut slot: usize) {
        while slot > 0 {
            let parent = (slot - 1) / self.d;
            if self.items[slot].priority < self.items[parent].priority {
                self.swap_slots(slot, parent);
                slot = parent;
            } else {
                break;
            }
        }
    }

    fn sift_down(&mut self, mut slot: usize) {
        let n = self.items.len();
        loop {
            let first_child = slot * self.d + 1;
            if first_child >= n {
                break;
            }
            let mut best = slot;
            let last_child = usize::min(first_child + self.d, n);
            for child in first_child..last_child {
                if self.items[child].priority < self.items[best].priority {
                    best = child;
                }
            }
            if best == slot {
                break;
            }
            self.swap_slots(slot, best);
            slot = best;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn new_heap_is_empty() {
        assert!(DHeap::new(4).is_empty());
    }

    #[test]
    fn new_heap_has_len_zero() {
        assert_eq!(DHeap::new(4).len(), 0);
    }

    #[test]
    #[should_panic]
    fn branching_factor_below_two_panics() {
        DHeap::new(1);
    }

    #[test]
    fn insert_makes_value_findable() {
        let mut pq = DHeap::new(4);
        pq.insert(Item::new(50, 50));
        assert!(pq.contains(50));
    }

    #[test]
    fn insert_increments_len() {
        let mut pq = DHeap::new(4);
        pq.insert(Item::new(1, 1));
        pq.insert(Item::new(2, 2));
        assert_eq!(pq.len(), 2);
    }

    #[test]
    fn front_returns_min_priority() {
        let mut pq = DHeap::new(4);
        pq.insert(Item::new(1, 2));
        pq.insert(Item::new(2, 1));
        assert_eq!(pq.front(), Some(&Item::new(2, 1)));
    }

    #[test]
    fn front_of_empty_is_none() {
        assert_eq!(DHeap::new(3).front(), None);
    }

    #[test]
    fn front_does_not_remove() {
        let mut pq = DHeap::new(4);
        pq.insert(Item::new(1, 1));
        let _ = pq.front();
        assert_eq!(pq.len(), 1);
    }

    #[test]
    fn pop_returns_min_priority() {
        let mut pq = DHeap::new(4);
        pq.insert(Item::new(1, 30));
        pq.insert(Item::new(2, 10));
        assert_eq!(pq.pop(), Some(Item::new(2, 10)));
    }

    #[test]
    fn pop_removes_item() {
        let mut pq = DHeap::new(4);
        pq.insert(Item::new(1, 1));
        pq.pop();
        assert!(!pq.contains(1));
    }

    #[test]
    fn pop_of_empty_is_none() {
        assert_eq!(DHeap::new(4).pop(), None);
    }

    #[test]
    fn pop_orders_by_priority() {
        let mut pq = DHeap::new(4);
        for (v, p) in [(1, 30), (2, 10), (3, 20)] {
            pq.insert(Item::new(v, p));
        }
        let drained: Vec<i64> = std::iter::from_fn(|| pq.pop().map(|i| i.value)).collect();
        assert_eq!(drained, vec![2, 3, 1]);
    }

    #[test]
    fn contains_false_when_absent() {
        assert!(!DHeap::new(4).contains(1));
    }

    #[test]
    fn contains_ignores_priority() {
        let mut pq = DHeap::new(4);
        pq.insert(Item::new(1, 7));
        assert!(pq.contains(1));
    }

    #[test]
    fn contains_false_after_pop() {
        let mut pq = DHeap::new(4);
        pq.insert(Item::new(1, 7));
        pq.pop();
        assert!(!pq.contains(1));
    }

    #[test]
    fn decrease_priority_promotes() {
        let mut pq = DHeap::new(4);
        pq.insert(Item::new(1, 9));
        pq.insert(Item::new(2, 2));
        assert!(pq.decrease_priority(1, 1));
        assert_eq!(pq.front(), Some(&Item::new(1, 1)));
    }

    #[test]
    fn decrease_priority_rejects_non_decrease() {
        let mut pq = DHeap::new(4);
        pq.insert(Item::new(1, 1));
        assert!(!pq.decrease_priority(1, 4));
    }

    #[test]
    fn decrease_priority_missing_value() {
        assert!(!DHeap::new(4).decrease_priority(9, 1));
    }

    #[test]
    fn increase_priority_demotes() {
        let mut pq = DHeap::new(4);
        pq.insert(Item::new(1, 1));
        pq.insert(Item::new(2, 5));
        assert!(pq.increase_priority(1, 9));
        assert_eq!(pq.front(), Some(&Item::new(2, 5)));
    }

    #[test]
    fn increase_priority_rejects_non_increase() {
        let mut pq = DHeap::new(4);
        pq.insert(Item::new(1, 9));
        assert!(!pq.increase_priority(1, 2));
    }

    #[test]
    fn increase_priority_missing_value() {
        assert!(!DHeap::new(4).increase_priority(9, 10));
    }

    #[test]
    fn duplicate_priorities_all_drain() {
        let mut pq = DHeap::new(4);
        for v in 0..6 {
            pq.insert(Item::new(v, 1));
        }
        let mut drained = 0;
        while pq.pop().is_some() {
            drained += 1;
        }
        assert_eq!(drained, 6);
    }

    #[test]
    fn summary_of_empty_heap() {
        assert_eq!(DHeap::new(4).summary(), "DHeap(d=4): empty");
    }

    #[test]
    fn summary_shows_front() {
        let mut pq = DHeap::new(4);
        pq.insert(Item::new(5, 2));
        assert_eq!(pq.summary(), "DHeap(d=4): 1 item(s), front=Item(5, 2)");
    }

    #[test]
    fn binary_heap_drains_sorted() {
        let mut pq = DHeap::new(2);
        for (v, p) in [(1, 5), (2, 3), (3, 8), (4, 1)] {
            pq.insert(Item::new(v, p));
        }
        let drained: Vec<i64> = std::iter::from_fn(|| pq.pop().map(|i| i.priority)).collect();
        assert_eq!(drained, vec![1, 3, 5, 8]);
    }

    #[test]
    fn wide_heap_drains_sorted() {
        let mut pq = DHeap::new(8);
        for p in [9, 4, 7, 1, 8, 2, 6, 3, 5, 0] {
            pq.insert(Item::new(p * 10, p));
        }
        let drained: Vec<i64> = std::iter::from_fn(|| pq.pop().map(|i| i.priority)).collect();
        assert_eq!(drained, (0..10).collect::<Vec<i64>>());
    }

    #[test]
    fn mixed_updates_keep_heap_property() {
        let mut pq = DHeap::new(4);
        for v in 0..16 {
            pq.insert(Item::new(v, 100 + v));
        }
        pq.decrease_priority(15, 1);
        pq.increase_priority(0, 500);
        assert_eq!(pq.pop(), Some(Item::new(15, 1)));
        let mut last = i64::MIN;
        while let Some(item) = pq.pop() {
            assert!(item.priority >= last);
            last = item.priority;
        }
    }

    #[test]
    #[ignore]
    fn stress_ten_thousand_elements() {
        let mut pq = DHeap::new(4);
        let mut x: i64 = 42;
        for v in 0..10_500 {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            pq.insert(Item::new(v, x % 1_000_000));
        }
        let mut last = i64::MIN;
        while let Some(item) = pq.pop() {
            assert!(item.priority >= last);
            last = item.priority;
        }
    }
}
