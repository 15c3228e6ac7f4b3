//! Test-only pause points inside the structural protocols.
//!
//! With the `hooks` feature a thread can install a callback that runs every
//! time that thread reaches one of the points below. Tests use it to freeze
//! an operation between two atomic steps while other threads run. Without
//! the feature the calls compile to nothing.

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HookPoint {
    /// A left split revision was just installed on the splitting node.
    SplitInstalled,
    /// About to CAS a temporary split node after the splitting node. The
    /// split version has already been checked.
    BeforeTempInsert,
    /// The temporary split node was linked.
    TempInserted,
    /// About to replace the temporary node with the new right node.
    BeforeNodeLink,
    /// A merge terminator was installed on the node being merged away.
    TerminatorInstalled,
    /// About to install the merge revision on the predecessor.
    BeforeMergeInstall,
    /// The merge revision was installed on the predecessor.
    MergeInstalled,
    /// An update's revisions are all linked; its version is about to be
    /// finalized.
    BeforeFinalize,
    /// A batch installed a revision on one node.
    BatchNodeApplied,
}

#[cfg(feature = "hooks")]
mod imp {
    use super::HookPoint;
    use std::cell::RefCell;

    type Hook = Box<dyn FnMut(HookPoint)>;

    thread_local! {
        static HOOK: RefCell<Option<Hook>> = const { RefCell::new(None) };
    }

    pub fn set_hook<F: FnMut(HookPoint) + 'static>(f: F) {
        HOOK.with(|h| *h.borrow_mut() = Some(Box::new(f)));
    }

    pub fn clear_hook() {
        HOOK.with(|h| *h.borrow_mut() = None);
    }

    #[inline]
    pub(crate) fn fire(point: HookPoint) {
        // Take the hook out while it runs so it may itself use the index.
        let Some(mut f) = HOOK.with(|h| h.borrow_mut().take()) else {
            return;
        };
        f(point);
        HOOK.with(|h| {
            let mut slot = h.borrow_mut();
            if slot.is_none() {
                *slot = Some(f);
            }
        });
    }
}

#[cfg(feature = "hooks")]
pub use imp::{clear_hook, set_hook};

#[cfg(feature = "hooks")]
pub(crate) use imp::fire;

#[cfg(not(feature = "hooks"))]
#[inline(always)]
pub(crate) fn fire(_point: HookPoint) {}
