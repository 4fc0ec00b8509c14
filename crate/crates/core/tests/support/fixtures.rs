use std::path::PathBuf;

use reqrefine::orchestrator::AnswerBook;
use reqrefine::{Requirement, RequirementId};

pub const R1: &str = "The system must allow the inventory manager to generate a list of missing products.";
pub const R2: &str = "The system will have a user-friendly interface and support all common browsers.";
pub const R3: &str = "A customer can cancel an order if he has not yet received it.";

pub const IMPROVED_R1: &str = "When the inventory manager or authorized personnel request a missing products list, the system shall generate a report that includes out-of-stock items and products below a predefined threshold, providing details such as product name, current quantity, supplier, and recommended reorder date. The list shall be available in PDF and CSV formats, as well as an on-screen display, and shall support filtering by category, supplier, and stock status, with sorting by priority.";

pub const EVALUATION_REPLY: &str = "\
| Feature Name | Feature Detail | Fulfilled (yes/no) |
|---|---|---|
| Necessary | Essential for inventory management | Yes |
| Appropriate | At the correct level for system requirements | Yes |
| Unambiguous | Clearly defines the function | No |
| Complete | Contains all necessary information | No |
| Singular | Addresses only one function | Yes |
| Feasible | Achievable with existing technology | Yes |
| Verifiable | Testable via inspection or system validation | No |
| Correct | Accurately describes the needed function | Yes |
| Conforming | Follows standard requirement guidelines | No |
";

pub const QUESTION_REPLY: &str = "\
| Feature Name | Suggested Questions |
|---|---|
| Unambiguous | What format should the generated list follow (e.g., PDF, CSV, on-screen display)? |
| Complete | Should the system allow filtering or sorting the missing product list? |
| Verifiable | What criteria will be used to confirm the list is correctly generated? |
";

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

pub fn answers(name: &str) -> AnswerBook {
    AnswerBook::load(&fixture(name)).expect("bundled answers file")
}

pub fn root(text: &str) -> Requirement {
    Requirement::authored(RequirementId::new("r1"), text).expect("non-empty text")
}
