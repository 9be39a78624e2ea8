//! Recursion-shaped store of pending sub-instances, one per exploration
//! thread.
//!
//! The exploring thread mirrors its call stack into the tree: when it
//! expands a node it registers the children left to right, then visits them
//! in order, marking each `Exploring` via [`TaskTree::begin_search`] just
//! before descending. Only nodes on the current call path are ever
//! `Exploring`, and only `Exploring` nodes have children, so the tree is a
//! caterpillar: internal nodes form a single downward path.
//!
//! The communication loop steals from the same tree with
//! [`TaskTree::take_highest_priority`], which walks down from the root —
//! deleting the root and re-rooting while it has exactly one child — and
//! removes the leftmost non-`Exploring` leaf-child of the first node with
//! two or more, i.e. the shallowest, oldest pending subproblem: the one
//! expected to carry the most work.
//!
//! Handles are generation-stamped slab indices. Stealing can race with the
//! explorer reaching the same node, and re-rooting deletes path nodes whose
//! stack frames are still live; a stale handle is detected (`Stolen` /
//! no-op) rather than dereferenced.

/// Handle to a tree node. Stale after the node is removed; never
/// dereferenced blindly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeHandle {
    idx: u32,
    stamp: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State {
    Pending,
    Exploring,
}

/// Outcome of trying to descend into a registered child.
#[derive(Debug)]
pub enum BeginSearch<I> {
    /// Still here; now marked `Exploring`, instance handed back for
    /// expansion.
    Run(I),
    /// Already extracted (or the tree rotated it away); skip it.
    Stolen,
}

struct Node<I> {
    state: State,
    instance: Option<I>,
    priority: i64,
    parent: Option<u32>,
    first_child: Option<u32>,
    last_child: Option<u32>,
    prev_sib: Option<u32>,
    next_sib: Option<u32>,
}

struct Slot<I> {
    stamp: u32,
    node: Option<Node<I>>,
}

pub struct TaskTree<I> {
    slots: Vec<Slot<I>>,
    free: Vec<u32>,
    root: Option<u32>,
    len: usize,
}

impl<I> Default for TaskTree<I> {
    fn default() -> Self {
        TaskTree::new()
    }
}

impl<I> TaskTree<I> {
    pub fn new() -> Self {
        TaskTree { slots: Vec::new(), free: Vec::new(), root: None, len: 0 }
    }

    pub fn node_count(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    fn alloc(&mut self, node: Node<I>) -> u32 {
        self.len += 1;
        if let Some(idx) = self.free.pop() {
            let slot = &mut self.slots[idx as usize];
            debug_assert!(slot.node.is_none());
            slot.node = Some(node);
            idx
        } else {
            self.slots.push(Slot { stamp: 0, node: Some(node) });
            (self.slots.len() - 1) as u32
        }
    }

    /// Remove a node that is already detached from parent/sibling links.
    fn release(&mut self, idx: u32) -> Node<I> {
        let slot = &mut self.slots[idx as usize];
        let node = slot.node.take().expect("releasing an empty slot");
        slot.stamp = slot.stamp.wrapping_add(1);
        self.free.push(idx);
        self.len -= 1;
        node
    }

    fn get(&self, h: NodeHandle) -> Option<&Node<I>> {
        let slot = self.slots.get(h.idx as usize)?;
        if slot.stamp != h.stamp {
            return None;
        }
        slot.node.as_ref()
    }

    fn node(&self, idx: u32) -> &Node<I> {
        self.slots[idx as usize].node.as_ref().expect("dangling index")
    }

    fn node_mut(&mut self, idx: u32) -> &mut Node<I> {
        self.slots[idx as usize].node.as_mut().expect("dangling index")
    }

    fn handle(&self, idx: u32) -> NodeHandle {
        NodeHandle { idx, stamp: self.slots[idx as usize].stamp }
    }

    /// Plant the root task (a fresh assignment from outside). The root
    /// starts `Pending`; the explorer claims it with `begin_search` like
    /// any other node. A childless root is not stealable, so the claim
    /// cannot lose a race.
    pub fn set_root(&mut self, instance: I, priority: i64) -> NodeHandle {
        assert!(self.root.is_none(), "set_root on a non-empty tree");
        let idx = self.alloc(Node {
            state: State::Pending,
            instance: Some(instance),
            priority,
            parent: None,
            first_child: None,
            last_child: None,
            prev_sib: None,
            next_sib: None,
        });
        self.root = Some(idx);
        self.handle(idx)
    }

    /// Register the sub-instances of the node currently being expanded,
    /// left to right. `parent` must be alive and `Exploring` — with one
    /// exception: into an empty tree, `parent = None` plants a bookkeeping
    /// root standing for the instance being expanded (whose own task was
    /// never in this tree) and hangs the children under it.
    pub fn register_children(
        &mut self,
        parent: Option<NodeHandle>,
        children: Vec<(I, i64)>,
    ) -> Result<Vec<NodeHandle>, TreeError> {
        let parent_idx = match parent {
            Some(h) => {
                let node = self.get(h).ok_or(TreeError::StaleHandle)?;
                if node.state != State::Exploring {
                    return Err(TreeError::ParentNotExploring);
                }
                h.idx
            }
            None => {
                if self.root.is_some() {
                    return Err(TreeError::ParentNotExploring);
                }
                let idx = self.alloc(Node {
                    state: State::Exploring,
                    instance: None,
                    priority: 0,
                    parent: None,
                    first_child: None,
                    last_child: None,
                    prev_sib: None,
                    next_sib: None,
                });
                self.root = Some(idx);
                idx
            }
        };
        let mut handles = Vec::with_capacity(children.len());
        for (instance, priority) in children {
            let prev = self.node(parent_idx).last_child;
            let idx = self.alloc(Node {
                state: State::Pending,
                instance: Some(instance),
                priority,
                parent: Some(parent_idx),
                first_child: None,
                last_child: None,
                prev_sib: prev,
                next_sib: None,
            });
            match prev {
                Some(p) => self.node_mut(p).next_sib = Some(idx),
                None => self.node_mut(parent_idx).first_child = Some(idx),
            }
            self.node_mut(parent_idx).last_child = Some(idx);
            handles.push(self.handle(idx));
        }
        Ok(handles)
    }

    /// Claim a registered child for local exploration. Returns its instance
    /// and marks it `Exploring` if it is still here; `Stolen` if extraction
    /// (or re-rooting past it) removed it first.
    pub fn begin_search(&mut self, h: NodeHandle) -> BeginSearch<I> {
        match self.get(h) {
            None => BeginSearch::Stolen,
            Some(node) => {
                debug_assert_eq!(node.state, State::Pending, "begin_search twice on one node");
                let node = self.node_mut(h.idx);
                node.state = State::Exploring;
                let instance = node.instance.take().expect("pending node carries its instance");
                BeginSearch::Run(instance)
            }
        }
    }

    /// The explorer finished the subtree under this node. A stale handle is
    /// normal (re-rooting trims exhausted path prefixes); a live node must
    /// be `Exploring` with no remaining children.
    pub fn complete(&mut self, h: NodeHandle) {
        let Some(node) = self.get(h) else { return };
        assert_eq!(node.state, State::Exploring, "complete on a pending node");
        assert!(node.first_child.is_none(), "complete with children still attached");
        let (parent, idx) = (node.parent, h.idx);
        match parent {
            Some(p) => self.detach(p, idx),
            None => self.root = None,
        }
        self.release(idx);
    }

    fn detach(&mut self, parent: u32, idx: u32) {
        let (prev, next) = {
            let n = self.node(idx);
            (n.prev_sib, n.next_sib)
        };
        match prev {
            Some(p) => self.node_mut(p).next_sib = next,
            None => self.node_mut(parent).first_child = next,
        }
        match next {
            Some(nx) => self.node_mut(nx).prev_sib = prev,
            None => self.node_mut(parent).last_child = prev,
        }
    }

    /// Steal the shallowest, leftmost pending task: walk from the root,
    /// deleting and re-rooting while the root has exactly one child, then
    /// take the leftmost non-`Exploring` leaf-child. `None` when nothing is
    /// stealable (which is not the same as the tree being empty: a lone
    /// pending root and a bare exploring path are both unstealable).
    pub fn take_highest_priority(&mut self) -> Option<(I, i64)> {
        loop {
            let root = self.root?;
            let first = self.node(root).first_child?;
            if self.node(first).next_sib.is_none() {
                // Single child: the root is exhausted as a branch point.
                // Its stack frame may still be live; the stamp bump turns
                // that frame's later calls into no-ops.
                self.root = Some(first);
                self.node_mut(first).parent = None;
                self.node_mut(root).first_child = None;
                self.node_mut(root).last_child = None;
                self.release(root);
                continue;
            }
            let mut cursor = Some(first);
            while let Some(idx) = cursor {
                let node = self.node(idx);
                if node.state == State::Pending {
                    debug_assert!(node.first_child.is_none(), "pending node with children");
                    self.detach(root, idx);
                    let node = self.release(idx);
                    return Some((
                        node.instance.expect("pending node carries its instance"),
                        node.priority,
                    ));
                }
                cursor = node.next_sib;
            }
            // Two or more children, all exploring: impossible with one
            // explorer per tree, but do not loop on it.
            return None;
        }
    }

    /// Priority of the task [`take_highest_priority`](Self::take_highest_priority)
    /// would return, without disturbing the tree.
    pub fn highest_pending_priority(&self) -> Option<i64> {
        let mut at = self.root?;
        loop {
            let node = self.node(at);
            let first = node.first_child?;
            if self.node(first).next_sib.is_none() {
                at = first;
                continue;
            }
            let mut cursor = Some(first);
            while let Some(idx) = cursor {
                let n = self.node(idx);
                if n.state == State::Pending {
                    return Some(n.priority);
                }
                cursor = n.next_sib;
            }
            return None;
        }
    }

    /// Walk the whole tree checking the caterpillar shape; test support.
    /// Returns `(nodes, exploring-path depth)`.
    pub fn check_invariants(&self) -> Result<(usize, usize), String> {
        let Some(root) = self.root else {
            if self.len != 0 {
                return Err(format!("empty root but {} nodes accounted", self.len));
            }
            return Ok((0, 0));
        };
        let mut seen = 0usize;
        let mut depth = 0usize;
        let mut stack = vec![(root, 0usize)];
        while let Some((idx, d)) = stack.pop() {
            seen += 1;
            let node = self.node(idx);
            let mut internal_children = 0;
            let mut cursor = node.first_child;
            let mut prev: Option<u32> = None;
            while let Some(c) = cursor {
                let child = self.node(c);
                if child.parent != Some(idx) {
                    return Err(format!("child {c} has wrong parent link"));
                }
                if child.prev_sib != prev {
                    return Err(format!("child {c} has wrong prev link"));
                }
                if child.first_child.is_some() {
                    internal_children += 1;
                    if child.state != State::Exploring {
                        return Err(format!("internal node {c} is not exploring"));
                    }
                }
                if child.state == State::Pending && child.instance.is_none() {
                    return Err(format!("pending node {c} lost its instance"));
                }
                stack.push((c, d + 1));
                prev = Some(c);
                cursor = child.next_sib;
            }
            if node.first_child.is_some() && node.state != State::Exploring {
                return Err(format!("internal node {idx} is not exploring"));
            }
            if internal_children > 1 {
                return Err(format!("node {idx} has {internal_children} internal children"));
            }
            if node.state == State::Exploring {
                depth = depth.max(d + 1);
            }
        }
        if seen != self.len {
            return Err(format!("reachable {seen} != accounted {}", self.len));
        }
        Ok((seen, depth))
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum TreeError {
    #[error("handle points at a removed node")]
    StaleHandle,
    #[error("parent is not an exploring node")]
    ParentNotExploring,
}
