/** Pure view-model for one vetting batch.
 *
 * Toggles start at the noisy label to minimize clicks, but nothing is
 * submittable until the annotator has explicitly decided every pair:
 * either by touching each relation toggle or by confirming the pair as a
 * whole. The submitted payload therefore never contains a value nobody
 * looked at.
 */

import type { BatchEntry, LabelMap, SessionView } from "./types.js";

export interface RelationDecision {
  relation: string;
  score: number;
  noisyLabel: 0 | 1;
  value: 0 | 1;
  touched: boolean;
}

export interface PairCard {
  pairId: string;
  head: string;
  tail: string;
  sentences: string[];
  decisions: RelationDecision[];
  confirmed: boolean;
}

export interface BatchViewModel {
  sessionId: string;
  batchId: string;
  iteration: number;
  budgetRemaining: number;
  budgetInitial: number;
  done: boolean;
  cards: PairCard[];
}

function cardFrom(entry: BatchEntry): PairCard {
  return {
    pairId: entry.pair_id,
    head: entry.head,
    tail: entry.tail,
    sentences: entry.sentences,
    decisions: entry.relations.map((cell) => ({
      relation: cell.relation,
      score: cell.score,
      noisyLabel: cell.noisy_label,
      value: cell.noisy_label,
      touched: false,
    })),
    confirmed: false,
  };
}

export function fromSessionView(view: SessionView): BatchViewModel {
  return {
    sessionId: view.session_id,
    batchId: view.batch_id,
    iteration: view.iteration,
    budgetRemaining: view.budget_remaining,
    budgetInitial: view.budget_initial,
    done: view.done,
    cards: view.batch.map(cardFrom),
  };
}

function updateCard(
  model: BatchViewModel,
  pairId: string,
  update: (card: PairCard) => PairCard,
): BatchViewModel {
  const index = model.cards.findIndex((c) => c.pairId === pairId);
  if (index < 0) throw new Error(`unknown pair ${pairId}`);
  const cards = model.cards.slice();
  cards[index] = update(model.cards[index]!);
  return { ...model, cards };
}

export function setDecision(
  model: BatchViewModel,
  pairId: string,
  relation: string,
  value: 0 | 1,
): BatchViewModel {
  return updateCard(model, pairId, (card) => {
    if (!card.decisions.some((d) => d.relation === relation)) {
      throw new Error(`unknown relation ${relation}`);
    }
    const decisions = card.decisions.map((d) =>
      d.relation === relation ? { ...d, value, touched: true } : d,
    );
    return { ...card, decisions };
  });
}

export function toggleDecision(
  model: BatchViewModel,
  pairId: string,
  relation: string,
): BatchViewModel {
  const card = model.cards.find((c) => c.pairId === pairId);
  const decision = card?.decisions.find((d) => d.relation === relation);
  if (!card || !decision) throw new Error(`unknown cell ${pairId}/${relation}`);
  return setDecision(model, pairId, relation, decision.value === 1 ? 0 : 1);
}

/** Confirm a pair: the annotator vouches for every toggle as shown. */
export function confirmPair(model: BatchViewModel, pairId: string): BatchViewModel {
  return updateCard(model, pairId, (card) => ({ ...card, confirmed: true }));
}

export function isPairComplete(card: PairCard): boolean {
  return card.confirmed || card.decisions.every((d) => d.touched);
}

export function isComplete(model: BatchViewModel): boolean {
  return model.cards.length > 0 && model.cards.every(isPairComplete);
}

export function completedCount(model: BatchViewModel): number {
  return model.cards.filter(isPairComplete).length;
}

/** True once any toggle or confirmation would be lost by a reload. */
export function isDirty(model: BatchViewModel): boolean {
  return model.cards.some(
    (card) => card.confirmed || card.decisions.some((d) => d.touched),
  );
}

export function labelsPayload(model: BatchViewModel): LabelMap {
  if (!isComplete(model)) {
    throw new Error("batch is not fully decided; refusing to fabricate labels");
  }
  const labels: LabelMap = {};
  for (const card of model.cards) {
    const entry: Record<string, 0 | 1> = {};
    for (const d of card.decisions) entry[d.relation] = d.value;
    labels[card.pairId] = entry;
  }
  return labels;
}
