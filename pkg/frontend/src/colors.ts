// Stable categorical colors: the same key always gets the same color
// within one assignment, in first-seen order.

const PALETTE = [
  '#4e79a7', '#f28e2b', '#e15759', '#76b7b4', '#59a14f', '#edc948',
  '#b07aa1', '#ff9da7', '#9c755f', '#bab0ac', '#1f77b4', '#d62728',
  '#2ca02c', '#9467bd', '#8c564b', '#e377c2',
];

export class ColorAssignment {
  private index = new Map<string, number>();

  color(key: string): string {
    let i = this.index.get(key);
    if (i === undefined) {
      i = this.index.size;
      this.index.set(key, i);
    }
    return PALETTE[i % PALETTE.length];
  }

  entries(): Array<[string, string]> {
    return [...this.index.keys()].map((k) => [k, this.color(k)]);
  }
}

export const OWNER_COLORS: Record<string, string> = {
  p1: '#4878cf',   // POV-friendly blue
  p2: '#d65f5f',   // enemy red
  none: '#6acc65', // neutral resources
};
