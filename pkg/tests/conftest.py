from activeval.data import EntityPair, PredictionDataset


def build_dataset(relations, rows):
    """Build a dataset from (pair_id, {relation: (score, noisy, oracle)}) rows.

    Pass oracle=None inside the tuple to omit oracle labels for that pair.
    """
    pairs = []
    for pair_id, cells in rows:
        scores = {rel: cells[rel][0] for rel in relations}
        noisy = {rel: cells[rel][1] for rel in relations}
        oracle_vals = {rel: cells[rel][2] for rel in relations}
        oracle = None if any(v is None for v in oracle_vals.values()) else oracle_vals
        pairs.append(
            EntityPair(
                pair_id=pair_id,
                head=f"head-{pair_id}",
                tail=f"tail-{pair_id}",
                scores=scores,
                noisy_labels=noisy,
                oracle_labels=oracle,
            )
        )
    return PredictionDataset(pairs=tuple(pairs), relations=tuple(relations))
