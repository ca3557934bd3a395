// Ranking table renderer.

import type { RankingRow } from "./types.js";

export function renderRankingTable(doc: Document, rows: RankingRow[]): HTMLTableElement {
  const table = doc.createElement("table");
  table.className = "ranking-table";
  const thead = doc.createElement("thead");
  const headRow = doc.createElement("tr");
  for (const label of ["#", "Name", "Crash count"]) {
    const th = doc.createElement("th");
    th.textContent = label;
    headRow.appendChild(th);
  }
  thead.appendChild(headRow);
  table.appendChild(thead);

  const tbody = doc.createElement("tbody");
  rows.forEach((row, i) => {
    const tr = doc.createElement("tr");
    tr.dataset["recordId"] = row.id;
    const rank = doc.createElement("td");
    rank.textContent = String(i + 1);
    const name = doc.createElement("td");
    name.textContent = row.name;
    const value = doc.createElement("td");
    value.textContent = String(row.value);
    tr.append(rank, name, value);
    tbody.appendChild(tr);
  });
  table.appendChild(tbody);
  return table;
}
