// jsdom does not implement object URLs; the app only needs stable strings.
const urlStatics = URL as unknown as {
  createObjectURL?: (blob: Blob) => string;
  revokeObjectURL?: (url: string) => void;
};
if (typeof urlStatics.createObjectURL !== "function") {
  let counter = 0;
  urlStatics.createObjectURL = () => `blob:preview-${counter++}`;
  urlStatics.revokeObjectURL = () => {};
}
