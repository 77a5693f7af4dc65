//! Competing rule extractors: decision-tree paths and class-consequent
//! association rules. Both produce a [`RuleSet`](crate::rulemine::RuleSet)
//! scored with the same statistics as the exhaustive miner.

mod assoc;
mod tree_rules;

pub use assoc::{default_min_support, frequent_itemsets, mine_assoc_rules, AssocConfig, Item, Itemset};
pub use tree_rules::{leaf_rule_conditions, mine_tree_rules, tree_min_leaf};
