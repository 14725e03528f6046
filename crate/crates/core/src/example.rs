//! The four-sequence running example used throughout the tests and docs.

use crate::seqdb::SequenceDatabase;

pub const RUNNING_EXAMPLE_DB: &str = "\
a:2 b:1 -1 c:2 -1 d:4 f:2 -1 -2
a:1 b:3 -1 e:1 f:1 -1 d:2 -1 c:1 -1 h:1 -1 -2
e:2 f:1 -1 g:1 -1 c:3 -1 b:1 -1 -2
e:2 f:1 -1 c:1 d:3 -1 g:3 -1 b:1 -1 -2
";

pub const RUNNING_EXAMPLE_EUTIL: &str = "\
a:2
b:1
c:3
d:1
e:2
f:3
g:2
h:1
";

pub fn running_example() -> SequenceDatabase {
    SequenceDatabase::parse(RUNNING_EXAMPLE_DB, RUNNING_EXAMPLE_EUTIL)
        .expect("running example parses")
}
