import { ApiClient } from "./api.js";
import { ConsoleView } from "./console.js";
import { ConsoleSession } from "./session.js";

const base = (window as unknown as { CRASHQUERY_BASE?: string }).CRASHQUERY_BASE ?? "";
const session = new ConsoleSession(new ApiClient(base));
const view = new ConsoleView(document, session);
document.getElementById("app")?.appendChild(view.root);
