use crate::dataset::RatingDataset;

/// Items ranked by rating count descending, ties by ascending item id.
pub(crate) fn rank_items(train: &RatingDataset) -> Vec<u32> {
    let mut order: Vec<u32> = (0..train.n_items() as u32).collect();
    order.sort_by(|&a, &b| {
        train
            .item_count(b)
            .cmp(&train.item_count(a))
            .then_with(|| train.items().id(a).cmp(train.items().id(b)))
    });
    order
}
